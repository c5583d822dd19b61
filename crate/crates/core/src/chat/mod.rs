//! CHAT transcript parsing.
//!
//! Reads TalkBank CHAT files and keeps only what the downstream graph needs:
//! the participant's main tier utterances, `%mor` part-of-speech tags,
//! `&=` gesture codes and `[* ...]` paraphasia codes. Everything else
//! (timestamps, retracing markers, comments, other speakers) is stripped.

mod tokenize;

pub use tokenize::{align_pos, classify_paraphasia, tokenize_main_tier};

use crate::error::ChatError;
use serde::{Deserialize, Serialize};

/// Part-of-speech class retained by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosClass {
    Noun,
    Verb,
    Other,
}

/// Word-production error class from `[* ...]` codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParaphasiaClass {
    None,
    Semantic,
    Phonemic,
    Neologistic,
}

/// A cleaned word token from the participant's main tier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordToken {
    pub surface: String,
    pub pos: PosClass,
    pub paraphasia: ParaphasiaClass,
}

/// A `&=` gesture code with its position in the utterance item sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub label: String,
    pub position: usize,
}

/// One item of an utterance: either a word or a gesture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Item {
    Word(WordToken),
    Gesture(GestureEvent),
}

impl Item {
    pub fn as_word(&self) -> Option<&WordToken> {
        match self {
            Item::Word(w) => Some(w),
            Item::Gesture(_) => None,
        }
    }

    pub fn as_gesture(&self) -> Option<&GestureEvent> {
        match self {
            Item::Gesture(g) => Some(g),
            Item::Word(_) => None,
        }
    }
}

/// One main-tier line of the participant, cleaned and tokenized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub items: Vec<Item>,
    /// 1-based line number of the main tier in the source file.
    pub source_line: usize,
}

impl Utterance {
    pub fn words(&self) -> impl Iterator<Item = &WordToken> {
        self.items.iter().filter_map(Item::as_word)
    }

    pub fn gestures(&self) -> impl Iterator<Item = &GestureEvent> {
        self.items.iter().filter_map(Item::as_gesture)
    }
}

/// One participant's parsed discourse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub participant_id: String,
    pub utterances: Vec<Utterance>,
    /// Word tokens only, summed over utterances.
    pub token_count: usize,
    /// Gesture events summed over utterances.
    pub gesture_count: usize,
}

impl Transcript {
    pub fn words(&self) -> impl Iterator<Item = &WordToken> {
        self.utterances.iter().flat_map(Utterance::words)
    }

    pub fn gestures(&self) -> impl Iterator<Item = &GestureEvent> {
        self.utterances.iter().flat_map(Utterance::gestures)
    }

    pub fn item_count(&self) -> usize {
        self.token_count + self.gesture_count
    }

    /// Equality up to `source_line`, for round-trip checks where the
    /// re-emitted file cannot preserve original line numbers.
    pub fn content_eq(&self, other: &Transcript) -> bool {
        self.participant_id == other.participant_id
            && self.token_count == other.token_count
            && self.gesture_count == other.gesture_count
            && self.utterances.len() == other.utterances.len()
            && self
                .utterances
                .iter()
                .zip(&other.utterances)
                .all(|(a, b)| a.items == b.items)
    }
}

/// Warning recorded during parsing; never fatal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseWarning {
    /// A `%mor` tier's word count differs from its main tier.
    MorTierMismatch {
        source_line: usize,
        main_words: usize,
        mor_words: usize,
    },
}

impl std::fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseWarning::MorTierMismatch {
                source_line,
                main_words,
                mor_words,
            } => write!(
                f,
                "line {source_line}: %mor tier has {mor_words} words, main tier has {main_words}"
            ),
        }
    }
}

/// A parsed transcript plus any non-fatal warnings.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub transcript: Transcript,
    pub warnings: Vec<ParseWarning>,
}

/// Default speaker tag for the person with aphasia.
pub const DEFAULT_PARTICIPANT_TAG: &str = "PAR";

#[derive(Debug)]
struct TierLine {
    tag: TierTag,
    payload: String,
    source_line: usize,
}

#[derive(Debug, PartialEq)]
enum TierTag {
    Main(String),
    Mor,
    OtherDependent,
    Header(String),
}

/// Split raw CHAT text into logical tier lines, joining continuations
/// (lines starting with whitespace extend the previous tier).
fn collect_tiers(raw: &str) -> Vec<TierLine> {
    let mut tiers: Vec<TierLine> = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let source_line = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('\t') || line.starts_with(' ') {
            if let Some(last) = tiers.last_mut() {
                last.payload.push(' ');
                last.payload.push_str(line.trim());
            }
            continue;
        }
        let (head, payload) = match line.split_once(':') {
            Some((head, payload)) => (head.trim(), payload.trim().to_string()),
            None => (line.trim(), String::new()),
        };
        let tag = if let Some(stripped) = head.strip_prefix('*') {
            TierTag::Main(stripped.trim().to_string())
        } else if head == "%mor" {
            TierTag::Mor
        } else if head.starts_with('%') {
            TierTag::OtherDependent
        } else {
            TierTag::Header(head.to_string())
        };
        tiers.push(TierLine {
            tag,
            payload,
            source_line,
        });
    }
    tiers
}

/// Extract the participant name from an `@Participants` header, e.g.
/// `@Participants: PAR adler01a Participant, INV Investigator`.
fn participant_name(payload: &str, tag: &str) -> Option<String> {
    for entry in payload.split(',') {
        let mut fields = entry.split_whitespace();
        if fields.next() == Some(tag) {
            if let Some(name) = fields.next() {
                // A two-field entry like `PAR Participant` carries a role,
                // not a name.
                if fields.next().is_some() {
                    return Some(name.to_string());
                }
            }
        }
    }
    None
}

/// Parse CHAT text into a [`Transcript`] for the given speaker tag.
///
/// Only `*<tag>:` main tiers and their dependent `%mor` tiers contribute;
/// all other speakers, headers and dependent tiers are ignored. Errors if
/// the input contains no main-tier line for the tag.
pub fn parse_transcript(raw: &str, participant_tag: &str) -> Result<ParseOutcome, ChatError> {
    let tiers = collect_tiers(raw);

    let mut participant_id: Option<String> = None;
    let mut pending: Vec<(String, usize, Option<String>)> = Vec::new();
    let mut last_main_is_participant = false;

    for tier in &tiers {
        match &tier.tag {
            TierTag::Main(tag) => {
                last_main_is_participant = tag == participant_tag;
                if last_main_is_participant {
                    pending.push((tier.payload.clone(), tier.source_line, None));
                }
            }
            TierTag::Mor => {
                if last_main_is_participant {
                    if let Some(entry) = pending.last_mut() {
                        if entry.2.is_none() {
                            entry.2 = Some(tier.payload.clone());
                        }
                    }
                }
            }
            TierTag::OtherDependent => {}
            TierTag::Header(name) => {
                if name == "@Participants" && participant_id.is_none() {
                    participant_id = participant_name(&tier.payload, participant_tag);
                }
            }
        }
    }

    if pending.is_empty() {
        return Err(ChatError::NoParticipantTier {
            tag: participant_tag.to_string(),
        });
    }

    let mut warnings = Vec::new();
    let mut utterances = Vec::with_capacity(pending.len());
    for (payload, source_line, mor) in pending {
        let mut items = tokenize_main_tier(&payload);
        if let Some(mismatch) = align_pos(&mut items, mor.as_deref()) {
            warnings.push(ParseWarning::MorTierMismatch {
                source_line,
                main_words: mismatch.0,
                mor_words: mismatch.1,
            });
        }
        utterances.push(Utterance { items, source_line });
    }

    let token_count = utterances.iter().map(|u| u.words().count()).sum();
    let gesture_count = utterances.iter().map(|u| u.gestures().count()).sum();

    Ok(ParseOutcome {
        transcript: Transcript {
            participant_id: participant_id.unwrap_or_else(|| participant_tag.to_string()),
            utterances,
            token_count,
            gesture_count,
        },
        warnings,
    })
}

/// Re-emit a transcript as CHAT text that parses back to equal content.
pub fn emit_chat(t: &Transcript) -> String {
    let mut out = String::new();
    out.push_str("@Begin\n");
    out.push_str(&format!(
        "@Participants:\t{} {} Participant\n",
        DEFAULT_PARTICIPANT_TAG, t.participant_id
    ));
    for utterance in &t.utterances {
        let mut main = String::new();
        let mut mor = String::new();
        for item in &utterance.items {
            match item {
                Item::Word(w) => {
                    if !main.is_empty() {
                        main.push(' ');
                    }
                    main.push_str(&w.surface);
                    match w.paraphasia {
                        ParaphasiaClass::None => {}
                        ParaphasiaClass::Semantic => main.push_str(" [* s]"),
                        ParaphasiaClass::Phonemic => main.push_str(" [* p]"),
                        ParaphasiaClass::Neologistic => main.push_str(" [* n]"),
                    }
                    if !mor.is_empty() {
                        mor.push(' ');
                    }
                    let cat = match w.pos {
                        PosClass::Noun => "n",
                        PosClass::Verb => "v",
                        PosClass::Other => "x",
                    };
                    mor.push_str(&format!("{cat}|{}", w.surface));
                }
                Item::Gesture(g) => {
                    if !main.is_empty() {
                        main.push(' ');
                    }
                    main.push_str(&format!("&={}", g.label));
                }
            }
        }
        main.push_str(if main.is_empty() { "." } else { " ." });
        out.push_str(&format!("*{}:\t{main}\n", DEFAULT_PARTICIPANT_TAG));
        if !mor.is_empty() {
            out.push_str(&format!("%mor:\t{mor} .\n"));
        }
    }
    out.push_str("@End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(u: &Utterance) -> Vec<&str> {
        u.words().map(|w| w.surface.as_str()).collect()
    }

    #[test]
    fn non_participant_tiers_excluded() {
        let raw = "*PAR:\tthe boy runs .\n*INV:\tgood job .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        assert_eq!(out.transcript.utterances.len(), 1);
        assert_eq!(out.transcript.token_count, 3);
    }

    #[test]
    fn timestamps_and_mor_alignment() {
        let raw = "*PAR:\tthe boy is running . \u{15}12345_15678\u{15}\n%mor:\tdet|the n|boy aux|be&PRES part|run-PRESP .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        let t = &out.transcript;
        assert_eq!(t.token_count, 4);
        assert_eq!(t.gesture_count, 0);
        assert!(out.warnings.is_empty());
        for w in t.words() {
            assert!(!w.surface.contains("12345"));
        }
        let pos: Vec<PosClass> = t.words().map(|w| w.pos).collect();
        assert_eq!(
            pos,
            vec![PosClass::Other, PosClass::Noun, PosClass::Verb, PosClass::Verb]
        );
    }

    #[test]
    fn bare_timestamp_stripped_too() {
        let raw = "*PAR:\tthe boy is running .\t12345_15678\n%mor:\tdet|the n|boy aux|be part|run .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        assert_eq!(out.transcript.token_count, 4);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn empty_file_is_malformed() {
        assert!(matches!(
            parse_transcript("", "PAR"),
            Err(ChatError::NoParticipantTier { .. })
        ));
    }

    #[test]
    fn mor_mismatch_recorded_as_warning() {
        let raw = "*PAR:\tthe boy runs .\n%mor:\tdet|the n|boy\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        assert_eq!(out.warnings.len(), 1);
        let t = &out.transcript;
        let pos: Vec<PosClass> = t.words().map(|w| w.pos).collect();
        // Common prefix aligned, remainder defaults to OTHER.
        assert_eq!(pos, vec![PosClass::Other, PosClass::Noun, PosClass::Other]);
    }

    #[test]
    fn paraphasia_attaches_to_preceding_word() {
        let raw = "*PAR:\tI saw a hammer [* s:r] there .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        let tagged: Vec<(&str, ParaphasiaClass)> = out
            .transcript
            .words()
            .map(|w| (w.surface.as_str(), w.paraphasia))
            .collect();
        assert_eq!(
            tagged.iter().find(|(s, _)| *s == "hammer").unwrap().1,
            ParaphasiaClass::Semantic
        );
        assert!(tagged
            .iter()
            .filter(|(s, _)| *s != "hammer")
            .all(|(_, p)| *p == ParaphasiaClass::None));
    }

    #[test]
    fn continuation_lines_join() {
        let raw = "*PAR:\tthe boy\n\tis running .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        assert_eq!(out.transcript.utterances.len(), 1);
        assert_eq!(out.transcript.token_count, 4);
    }

    #[test]
    fn utterance_order_preserved() {
        let raw = "*PAR:\tone .\n*INV:\tokay .\n*PAR:\ttwo .\n*PAR:\tthree .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        let surfaces: Vec<Vec<&str>> = out.transcript.utterances.iter().map(words).collect();
        assert_eq!(surfaces, vec![vec!["one"], vec!["two"], vec!["three"]]);
        let lines: Vec<usize> = out
            .transcript
            .utterances
            .iter()
            .map(|u| u.source_line)
            .collect();
        assert_eq!(lines, vec![1, 3, 4]);
    }

    #[test]
    fn participant_id_from_header() {
        let raw =
            "@Participants:\tPAR adler01a Participant, INV Investigator\n*PAR:\thello there .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        assert_eq!(out.transcript.participant_id, "adler01a");
    }

    #[test]
    fn gesture_positions_strictly_increasing() {
        let raw = "*PAR:\t&=points the boy &=shrugs runs &=nods .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        let u = &out.transcript.utterances[0];
        let positions: Vec<usize> = u.gestures().map(|g| g.position).collect();
        assert_eq!(positions, vec![0, 3, 5]);
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn emit_roundtrip_preserves_content() {
        let raw = "@Participants:\tPAR p42 Participant\n\
                   *PAR:\tthe boy &=points is running . 123_456\n\
                   %mor:\tdet|the n|boy aux|be part|run-PRESP .\n\
                   *PAR:\tI saw a hammer [* s:r] .\n\
                   %mor:\tpro|I v|see&PAST det|a n|hammer .\n";
        let t1 = parse_transcript(raw, "PAR").unwrap().transcript;
        let t2 = parse_transcript(&emit_chat(&t1), "PAR").unwrap().transcript;
        assert!(t1.content_eq(&t2));
        // A second round trip is exactly equal, source lines included.
        let t3 = parse_transcript(&emit_chat(&t2), "PAR").unwrap().transcript;
        assert_eq!(t2, t3);
    }

    #[test]
    fn counts_match_invariants() {
        let raw = "*PAR:\tthe boy &=points runs .\n*PAR:\t&=laughs .\n";
        let out = parse_transcript(raw, "PAR").unwrap();
        let t = &out.transcript;
        assert_eq!(t.token_count, t.words().count());
        assert_eq!(t.gesture_count, t.gestures().count());
        assert_eq!(t.token_count, 3);
        assert_eq!(t.gesture_count, 2);
    }
}
