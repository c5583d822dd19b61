//! Main-tier tokenization and annotation handling.

use super::{GestureEvent, Item, ParaphasiaClass, PosClass, WordToken};

/// True for `123_456`-style timestamp fragments.
fn is_timestamp(token: &str) -> bool {
    match token.split_once('_') {
        Some((a, b)) => {
            !a.is_empty()
                && !b.is_empty()
                && a.chars().all(|c| c.is_ascii_digit())
                && b.chars().all(|c| c.is_ascii_digit())
        }
        None => false,
    }
}

/// Unintelligible-speech placeholders; dropped so they never become nodes.
fn is_unintelligible(token: &str) -> bool {
    matches!(token, "xxx" | "yyy" | "www")
}

/// Classify the content of a bracketed error code (`[* s:r]` gives `* s:r`).
///
/// Codes starting `s`/`p`/`n` after the asterisk map to semantic, phonemic
/// and neologistic paraphasia; anything else falls through to `None`.
/// Whitespace after the `*` is tolerated.
pub fn classify_paraphasia(annotation: &str) -> ParaphasiaClass {
    let code = annotation
        .trim()
        .strip_prefix('*')
        .unwrap_or(annotation)
        .trim_start();
    match code.chars().next() {
        Some('s') => ParaphasiaClass::Semantic,
        Some('p') => ParaphasiaClass::Phonemic,
        Some('n') => ParaphasiaClass::Neologistic,
        _ => ParaphasiaClass::None,
    }
}

fn push_token(token: &str, items: &mut Vec<Item>) {
    let token = token.trim_matches('\u{15}');
    if token.is_empty() {
        return;
    }
    if let Some(label) = token.strip_prefix("&=") {
        if !label.is_empty() {
            items.push(Item::Gesture(GestureEvent {
                label: label.to_lowercase(),
                position: items.len(),
            }));
        }
        return;
    }
    // Other `&`-prefixed material (fillers, fragments) is not lexical.
    if token.starts_with('&') {
        return;
    }
    if is_timestamp(token) || is_unintelligible(token) {
        return;
    }
    // Omission parentheses: `(be)cause` was produced as `because`.
    let cleaned: String = token.chars().filter(|c| *c != '(' && *c != ')').collect();
    let cleaned = cleaned.trim_matches(|c: char| !c.is_alphanumeric());
    if cleaned.is_empty() || !cleaned.chars().any(|c| c.is_alphabetic()) {
        return;
    }
    if is_unintelligible(cleaned) {
        return;
    }
    items.push(Item::Word(WordToken {
        surface: cleaned.to_lowercase(),
        pos: PosClass::Other,
        paraphasia: ParaphasiaClass::None,
    }));
}

fn apply_annotation(content: &str, items: &mut [Item]) {
    if !content.trim_start().starts_with('*') {
        // `[: target]`, `[% ...]`, `[/]`, `[//]`, `[+ ...]` and friends
        // carry no token content; consume silently.
        return;
    }
    let class = classify_paraphasia(content);
    if class == ParaphasiaClass::None {
        return;
    }
    if let Some(Item::Word(word)) = items
        .iter_mut()
        .rev()
        .find(|item| matches!(item, Item::Word(_)))
    {
        // First code wins when a word carries several.
        if word.paraphasia == ParaphasiaClass::None {
            word.paraphasia = class;
        }
    }
}

/// Tokenize a participant main-tier payload (speaker tag already removed).
///
/// Gesture codes become [`GestureEvent`]s at their in-sequence position,
/// bracketed annotations are consumed (paraphasia codes attach to the
/// preceding word), and timestamp/punctuation/digit-only tokens are dropped.
/// Surfaces are lowercased. Always returns a list, possibly empty.
pub fn tokenize_main_tier(payload: &str) -> Vec<Item> {
    let mut items = Vec::new();
    let mut current = String::new();
    let mut chars = payload.chars();
    while let Some(c) = chars.next() {
        match c {
            '[' => {
                push_token(&current, &mut items);
                current.clear();
                let mut annotation = String::new();
                for inner in chars.by_ref() {
                    if inner == ']' {
                        break;
                    }
                    annotation.push(inner);
                }
                apply_annotation(&annotation, &mut items);
            }
            '<' | '>' => {
                // Retraced-group delimiters; the words inside stay.
            }
            c if c.is_whitespace() => {
                push_token(&current, &mut items);
                current.clear();
            }
            c => current.push(c),
        }
    }
    push_token(&current, &mut items);
    items
}

/// Map a `%mor` category to the coarse POS classes.
fn map_mor_category(category: &str) -> PosClass {
    let c = category.to_lowercase();
    if c.starts_with("neg") {
        return PosClass::Other;
    }
    if c.starts_with('n') {
        return PosClass::Noun;
    }
    if ["v", "aux", "part", "cop", "mod"]
        .iter()
        .any(|prefix| c.starts_with(prefix))
    {
        return PosClass::Verb;
    }
    PosClass::Other
}

/// Extract the aligned POS categories from a `%mor` payload.
fn mor_categories(payload: &str) -> Vec<PosClass> {
    payload
        .split_whitespace()
        .filter(|token| token.chars().any(|c| c.is_alphabetic()))
        .filter_map(|token| {
            let category = token.split(['|', '~']).next().unwrap_or(token);
            // `cm|cm` marks a comma the main tier dropped.
            if category == "cm" {
                None
            } else {
                Some(map_mor_category(category))
            }
        })
        .collect()
}

/// Align `%mor` categories onto the word tokens of an utterance, skipping
/// gesture items. On a count mismatch the common prefix is aligned, the
/// remainder keeps the OTHER default, and `(main_words, mor_words)` is
/// returned so the caller can record a warning. An absent tier leaves all
/// tokens OTHER.
pub fn align_pos(items: &mut [Item], mor_tier: Option<&str>) -> Option<(usize, usize)> {
    let payload = mor_tier?;
    let categories = mor_categories(payload);
    let mut word_count = 0;
    let mut cursor = categories.iter();
    for item in items.iter_mut() {
        if let Item::Word(word) = item {
            word_count += 1;
            if let Some(pos) = cursor.next() {
                word.pos = *pos;
            }
        }
    }
    if word_count == categories.len() {
        None
    } else {
        Some((word_count, categories.len()))
    }
}
