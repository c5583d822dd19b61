//! Synthetic CHAT corpus generation with controllable severity.
//!
//! The clinical corpus this pipeline targets is credential-gated, so tests
//! and demos run on generated transcripts instead. Only the sign of each
//! severity relationship is anchored (more gestures and more paraphasia at
//! lower scores); the curve shapes are linear in (100 - severity).

use crate::eval::WabScores;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

const NOUNS: [&str; 24] = [
    "boy", "girl", "dog", "cat", "house", "ball", "water", "sandwich", "knife", "jelly",
    "butter", "bread", "table", "car", "tree", "bird", "mother", "father", "door", "window",
    "picture", "story", "hand", "shoe",
];
const VERBS: [&str; 16] = [
    "run", "walk", "see", "want", "make", "take", "put", "go", "come", "look", "give", "eat",
    "open", "close", "hold", "wash",
];
const OTHERS: [&str; 14] = [
    "the", "a", "and", "then", "very", "big", "small", "here", "there", "now", "red", "good",
    "slowly", "again",
];
const OTHER_MOR_CATEGORIES: [&str; 6] = ["det", "pro", "adv", "prep", "adj", "co"];
const GESTURE_LABELS: [&str; 6] = ["point", "shrug", "nod", "headshake", "wave", "beat"];
const NEOLOGISMS: [&str; 8] = [
    "krumplik", "fendle", "plimbo", "tarkin", "sloof", "brintle", "quopper", "zibber",
];

/// Generator knobs. `max_*` rates apply at severity 0 and fall linearly to
/// (almost) zero at severity 100.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub seed: u64,
    pub severity_min: f64,
    pub severity_max: f64,
    pub max_para_sem: f64,
    pub max_para_phon: f64,
    pub max_para_neo: f64,
    pub max_gesture_rate: f64,
    /// Residual gesture rate at severity 100.
    pub base_gesture_rate: f64,
    pub utterances_min: usize,
    pub utterances_max: usize,
    /// Mean utterance length at severity 0 and 100.
    pub words_at_severe: f64,
    pub words_at_mild: f64,
    /// Standard deviation of the Gaussian noise on WAB targets.
    pub target_noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_participants: 100,
            seed: 20240901,
            severity_min: 0.0,
            severity_max: 100.0,
            max_para_sem: 0.16,
            max_para_phon: 0.10,
            max_para_neo: 0.08,
            max_gesture_rate: 0.30,
            base_gesture_rate: 0.01,
            utterances_min: 10,
            utterances_max: 22,
            words_at_severe: 3.5,
            words_at_mild: 9.0,
            target_noise_sd: 4.0,
        }
    }
}

fn deficit(severity: f64) -> f64 {
    ((100.0 - severity) / 100.0).clamp(0.0, 1.0)
}

/// Expected paraphasia rates (semantic, phonemic, neologistic) at a given
/// severity; each is monotone non-increasing in severity.
pub fn para_rates_for(severity: f64, cfg: &SynthConfig) -> (f64, f64, f64) {
    let d = deficit(severity);
    (
        cfg.max_para_sem * d,
        cfg.max_para_phon * d,
        cfg.max_para_neo * d,
    )
}

/// Expected per-token gesture rate; monotone non-increasing in severity.
pub fn gesture_rate_for(severity: f64, cfg: &SynthConfig) -> f64 {
    cfg.base_gesture_rate + cfg.max_gesture_rate * deficit(severity)
}

/// Ground-truth counts the generator tallies while emitting, used to verify
/// exact round-trips through the parser.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthTallies {
    pub words: usize,
    pub gestures: usize,
    pub para_sem: usize,
    pub para_phon: usize,
    pub para_neo: usize,
}

#[derive(Debug, Clone)]
pub struct GeneratedParticipant {
    pub id: String,
    pub severity: f64,
    pub chat_text: String,
    pub scores: WabScores,
    pub tallies: SynthTallies,
}

#[derive(Clone, Copy, PartialEq)]
enum SlotClass {
    Noun,
    Verb,
    Other,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms, one normal kept.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn mutate_first_consonant(word: &str, rng: &mut ChaCha8Rng) -> String {
    const CONSONANTS: [char; 10] = ['b', 'd', 'f', 'g', 'k', 'm', 'p', 's', 't', 'w'];
    let mut chars: Vec<char> = word.chars().collect();
    let replacement = CONSONANTS[rng.gen_range(0..CONSONANTS.len())];
    if chars[0] == replacement {
        chars[0] = if replacement == 'b' { 'd' } else { 'b' };
    } else {
        chars[0] = replacement;
    }
    chars.into_iter().collect()
}

/// Generate one participant's CHAT transcript and WAB scores.
///
/// The text is valid CHAT with `*PAR:`/`%mor:` tiers, inline `&=` gestures,
/// `[* ...]` paraphasia codes, timestamps and occasional investigator lines
/// and `xxx` fragments, all of which round-trip through the parser with
/// zero warnings. Deterministic for a fixed (severity, seed).
pub fn generate_participant(
    severity: f64,
    cfg: &SynthConfig,
    seed: u64,
    id: &str,
) -> GeneratedParticipant {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies = SynthTallies::default();

    // Severer speakers draw from a narrower vocabulary.
    let vocab_frac = 0.35 + 0.65 * severity / 100.0;
    let nouns = &NOUNS[..((NOUNS.len() as f64 * vocab_frac) as usize).clamp(3, NOUNS.len())];
    let verbs = &VERBS[..((VERBS.len() as f64 * vocab_frac) as usize).clamp(2, VERBS.len())];
    let others = &OTHERS[..((OTHERS.len() as f64 * vocab_frac) as usize).clamp(3, OTHERS.len())];

    let (mut sem_rate, mut phon_rate, mut neo_rate) = para_rates_for(severity, cfg);
    // Participant-level variation so paraphasia alone is a noisy predictor.
    let para_jitter = rng.gen_range(0.85..1.15);
    sem_rate *= para_jitter;
    phon_rate *= para_jitter;
    neo_rate *= para_jitter;
    let gesture_rate = gesture_rate_for(severity, cfg);

    let utterance_count = rng.gen_range(cfg.utterances_min..=cfg.utterances_max);
    let mean_words =
        cfg.words_at_severe + (cfg.words_at_mild - cfg.words_at_severe) * severity / 100.0;

    let mut text = String::new();
    text.push_str("@UTF8\n@Begin\n@Languages:\teng\n");
    text.push_str(&format!(
        "@Participants:\tPAR {id} Participant, INV Investigator\n"
    ));
    text.push_str(&format!(
        "@ID:\teng|synth|PAR|||||Participant|{id}||\n"
    ));

    let mut clock = 0u64;
    for utterance_idx in 0..utterance_count {
        if utterance_idx % 5 == 4 {
            text.push_str("*INV:\tmhm keep going .\n");
        }

        // Occasionally a gesture-only utterance at the severe end.
        if severity < 40.0 && rng.gen_bool((gesture_rate / 2.0).clamp(0.0, 0.5)) {
            let label = GESTURE_LABELS[rng.gen_range(0..GESTURE_LABELS.len())];
            tallies.gestures += 1;
            let end = clock + 1200;
            text.push_str(&format!("*PAR:\t&={label} . \u{15}{clock}_{end}\u{15}\n"));
            clock = end;
            continue;
        }

        let len = (mean_words + 1.5 * gaussian(&mut rng)).round().clamp(1.0, 14.0) as usize;
        let mut main = String::new();
        let mut mor = String::new();
        // Utterance-initial gestures link forward to the following word.
        if rng.gen_bool(gesture_rate.clamp(0.0, 0.5)) {
            let label = GESTURE_LABELS[rng.gen_range(0..GESTURE_LABELS.len())];
            main.push_str(&format!("&={label}"));
            tallies.gestures += 1;
        }
        for _ in 0..len {
            let class_draw: f64 = rng.gen();
            let class = if class_draw < 0.40 {
                SlotClass::Other
            } else if class_draw < 0.75 {
                SlotClass::Noun
            } else {
                SlotClass::Verb
            };
            let intended = match class {
                SlotClass::Noun => nouns[rng.gen_range(0..nouns.len())],
                SlotClass::Verb => verbs[rng.gen_range(0..verbs.len())],
                SlotClass::Other => others[rng.gen_range(0..others.len())],
            };

            let para_draw: f64 = rng.gen();
            let (surface, code) = if para_draw < sem_rate && class != SlotClass::Other {
                // Substitute a same-class real word.
                let substitute = match class {
                    SlotClass::Noun => nouns[rng.gen_range(0..nouns.len())],
                    SlotClass::Verb => verbs[rng.gen_range(0..verbs.len())],
                    SlotClass::Other => unreachable!(),
                };
                tallies.para_sem += 1;
                (substitute.to_string(), Some("[* s:r]"))
            } else if para_draw < sem_rate + phon_rate {
                tallies.para_phon += 1;
                (mutate_first_consonant(intended, &mut rng), Some("[* p:n]"))
            } else if para_draw < sem_rate + phon_rate + neo_rate {
                tallies.para_neo += 1;
                (
                    NEOLOGISMS[rng.gen_range(0..NEOLOGISMS.len())].to_string(),
                    Some("[* n]"),
                )
            } else {
                (intended.to_string(), None)
            };

            if !main.is_empty() {
                main.push(' ');
            }
            main.push_str(&surface);
            if let Some(code) = code {
                main.push(' ');
                main.push_str(code);
            }
            tallies.words += 1;

            if !mor.is_empty() {
                mor.push(' ');
            }
            let category = match class {
                SlotClass::Noun => "n",
                SlotClass::Verb => "v",
                SlotClass::Other => {
                    OTHER_MOR_CATEGORIES[rng.gen_range(0..OTHER_MOR_CATEGORIES.len())]
                }
            };
            mor.push_str(&format!("{category}|{surface}"));

            if rng.gen_bool(gesture_rate.clamp(0.0, 1.0)) {
                let label = GESTURE_LABELS[rng.gen_range(0..GESTURE_LABELS.len())];
                main.push_str(&format!(" &={label}"));
                tallies.gestures += 1;
            }
        }

        // Unintelligible fragment: parsed away, never counted, no mor entry.
        if severity < 50.0 && rng.gen_bool(0.15) {
            main.push_str(" xxx");
        }

        let end = clock + 2000 + rng.gen_range(0..800);
        text.push_str(&format!("*PAR:\t{main} . \u{15}{clock}_{end}\u{15}\n"));
        text.push_str(&format!("%mor:\t{mor} .\n"));
        clock = end;
    }
    text.push_str("@End\n");

    let noise = cfg.target_noise_sd;
    let scores = WabScores {
        wab_aq: (severity + noise * gaussian(&mut rng)).clamp(0.0, 100.0),
        fluency: (severity / 10.0 + noise / 10.0 * gaussian(&mut rng)).clamp(0.0, 10.0),
        sequential_commands: (severity * 0.9 + 5.0 + noise * gaussian(&mut rng)).clamp(0.0, 100.0),
        repetition: (severity * 0.95 + noise * gaussian(&mut rng)).clamp(0.0, 100.0),
    };

    GeneratedParticipant {
        id: id.to_string(),
        severity,
        chat_text: text,
        scores,
        tallies,
    }
}

fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug)]
pub struct CorpusSummary {
    pub participants: Vec<GeneratedParticipant>,
}

/// Generate the whole corpus in memory: severities sampled uniformly over
/// the configured range, per-participant seeds derived from the corpus
/// seed.
pub fn generate_participants(cfg: &SynthConfig) -> Vec<GeneratedParticipant> {
    let mut corpus_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_participants)
        .map(|index| {
            let severity = corpus_rng.gen_range(cfg.severity_min..=cfg.severity_max);
            let id = format!("synth{index:04}");
            generate_participant(severity, cfg, mix_seed(cfg.seed, index as u64 + 1), &id)
        })
        .collect()
}

/// The WAB score sheet in the exact format the ingestion stage reads.
pub fn scores_csv(participants: &[GeneratedParticipant]) -> String {
    let mut csv = String::from("participant_id,wab_aq,fluency,sequential_commands,repetition\n");
    for p in participants {
        csv.push_str(&format!(
            "{},{:.3},{:.3},{:.3},{:.3}\n",
            p.id, p.scores.wab_aq, p.scores.fluency, p.scores.sequential_commands, p.scores.repetition
        ));
    }
    csv
}

/// Emit one `.cha` per participant plus `wab_scores.csv` into `out_dir`.
pub fn generate_corpus(cfg: &SynthConfig, out_dir: &Path) -> std::io::Result<CorpusSummary> {
    std::fs::create_dir_all(out_dir)?;
    let participants = generate_participants(cfg);
    for participant in &participants {
        std::fs::write(
            out_dir.join(format!("{}.cha", participant.id)),
            &participant.chat_text,
        )?;
    }
    let mut csv = std::fs::File::create(out_dir.join("wab_scores.csv"))?;
    csv.write_all(scores_csv(&participants).as_bytes())?;
    Ok(CorpusSummary { participants })
}
