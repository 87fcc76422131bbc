use crate::tools::RegistryRender;

/// The ReAct prompt template, kept byte-identical to the reference wording
/// (including its trailing spaces).
pub const REACT_TEMPLATE: &str = include_str!("../../resources/react_prompt.txt");

const BEGIN: &str = "Begin!";

/// Substitutes `{name}` placeholders in a single pass, so substituted text
/// is never rescanned.
fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + values.iter().map(|v| v.1.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = values.iter().find(|(k, _)| {
            tail.len() > k.len() + 1
                && tail[1..].starts_with(k)
                && tail.as_bytes()[k.len() + 1] == b'}'
        });
        match hit {
            Some((k, v)) => {
                out.push_str(v);
                rest = &tail[k.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Fills the template. A nonempty scratchpad (as produced by
/// `render_scratchpad`) continues the trailing `Thought:` and is followed
/// by a fresh `Thought:` so the model always resumes at the same marker.
/// Memory text, when given, goes right before `Begin!`.
pub fn build_prompt(render: &RegistryRender, question: &str, scratchpad: &str, memory: Option<&str>) -> String {
    let pad = if scratchpad.is_empty() {
        String::new()
    } else {
        let body = scratchpad.strip_prefix("Thought:").unwrap_or(scratchpad);
        let sep = if body.ends_with('\n') { "" } else { "\n" };
        format!("{body}{sep}Thought:")
    };
    let prompt = fill(
        REACT_TEMPLATE,
        &[
            ("tools", &render.tools_block),
            ("tool_names", &render.tool_names_block),
            ("input", question),
            ("agent_scratchpad", &pad),
        ],
    );
    match memory.filter(|m| !m.trim().is_empty()) {
        Some(mem) => {
            let at = prompt.find(&format!("\n{BEGIN}\n")).map(|i| i + 1).unwrap_or(0);
            let mut block = String::from("Previous conversation:\n");
            block.push_str(mem.trim_end());
            block.push_str("\n\n");
            let mut out = prompt;
            out.insert_str(at, &block);
            out
        }
        None => prompt,
    }
}

/// Splits a prompt into (text before `Begin!`, text after it).
pub fn split_at_begin(prompt: &str) -> (&str, &str) {
    match prompt.find(&format!("\n{BEGIN}\n")) {
        Some(i) => (&prompt[..i], &prompt[i + BEGIN.len() + 2..]),
        None => ("", prompt),
    }
}
