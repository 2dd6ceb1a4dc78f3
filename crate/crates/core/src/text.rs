//! Small text helpers shared by the rule-based scorers and METEOR.

/// Lowercases and folds every non-alphanumeric run to one space, padded with
/// a space on both sides so phrases can be matched on word boundaries with a
/// plain substring search.
pub fn normalize_for_matching(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push(' ');
    let mut last_space = true;
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
            last_space = false;
        } else if !last_space {
            out.push(' ');
            last_space = true;
        }
    }
    if !last_space {
        out.push(' ');
    }
    out
}

/// Whether `normalized` (from [`normalize_for_matching`]) contains `phrase`
/// as a whole-word sequence.
pub fn contains_phrase(normalized: &str, phrase: &str) -> bool {
    let phrase = normalize_for_matching(phrase);
    !phrase.trim().is_empty() && normalized.contains(&phrase)
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize_for_matching(text)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Non-comment, non-blank lines of a resource file.
pub fn resource_lines(resource: &str) -> impl Iterator<Item = &str> {
    resource
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
}

/// Replaces `{slot}` placeholders in one left-to-right pass. Substituted
/// values are never rescanned, so a value containing `{slot}` stays literal.
/// Braces that do not name a known slot are copied through unchanged.
pub fn fill_template(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = slots.iter().find(|(name, _)| {
            tail.len() > name.len() + 1
                && tail[1..].starts_with(name)
                && tail[1 + name.len()..].starts_with('}')
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
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
