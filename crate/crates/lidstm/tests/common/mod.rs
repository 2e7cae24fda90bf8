//! Shared fixtures for integration tests: a synthetic multilingual corpus
//! with language-plausible, frequency-weighted word stock, plus writers that
//! materialize it as CoNLL-U or plain-line files.
//!
//! The Scandinavian trio (da/no/sv) deliberately shares a large part of its
//! high-frequency vocabulary, mirroring the real orthographic overlap that
//! makes those languages hard to tell apart in ten characters.
#![allow(dead_code)]

use lidstm::corpus::{clean_text, trim_sample, FoldedDataset, LanguageSet, Sample, MAX_SAMPLE_CHARS};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// A synthetic language: ISO-ish code plus weighted word stock.
pub struct LangSpec {
    pub code: &'static str,
    pub words: &'static [(&'static str, u32)],
}

pub const EN: LangSpec = LangSpec {
    code: "en",
    words: &[
        ("the", 20), ("of", 12), ("and", 12), ("to", 10), ("a", 9), ("in", 8), ("that", 6),
        ("is", 6), ("was", 5), ("he", 5), ("for", 5), ("it", 5), ("with", 4), ("as", 4),
        ("his", 4), ("on", 4), ("be", 4), ("at", 3), ("by", 3), ("had", 3), ("not", 3),
        ("are", 3), ("but", 3), ("from", 3), ("or", 2), ("have", 2), ("an", 2), ("they", 2),
        ("which", 2), ("one", 2), ("you", 2), ("were", 2), ("her", 2), ("all", 2), ("she", 2),
        ("there", 2), ("would", 2), ("their", 1), ("we", 1), ("him", 1), ("been", 1),
        ("has", 1), ("when", 1), ("who", 1), ("will", 1), ("more", 1), ("out", 1), ("said", 1),
        ("what", 1), ("about", 1), ("time", 1), ("people", 1), ("world", 1), ("little", 1),
        ("house", 1), ("water", 1), ("night", 1), ("through", 1), ("years", 1), ("thought", 1),
    ],
};

pub const FI: LangSpec = LangSpec {
    code: "fi",
    words: &[
        ("ja", 15), ("on", 12), ("ei", 8), ("että", 6), ("se", 5), ("hän", 5), ("oli", 5),
        ("mutta", 4), ("kun", 4), ("niin", 4), ("myös", 3), ("tämä", 3), ("ovat", 3),
        ("joka", 3), ("vain", 3), ("kuin", 3), ("mitä", 2), ("jos", 2), ("nyt", 2),
        ("sen", 2), ("ole", 2), ("vuonna", 2), ("sitä", 2), ("voi", 2), ("kaikki", 2),
        ("hyvin", 1), ("paljon", 1), ("päivä", 1), ("talo", 1), ("järvi", 1), ("metsä", 1),
        ("vesi", 1), ("kieli", 1), ("koulu", 1), ("kirja", 1), ("lapsi", 1), ("äiti", 1),
        ("isä", 1), ("kaupunki", 1), ("yksi", 1), ("kaksi", 1), ("kolme", 1), ("aika", 1),
        ("uusi", 1), ("vanha", 1), ("suuri", 1), ("pieni", 1), ("hyvä", 1), ("sydän", 1),
        ("yö", 1), ("työ", 1), ("tyttö", 1), ("poika", 1), ("ystävä", 1), ("perhe", 1),
    ],
};

pub const TR: LangSpec = LangSpec {
    code: "tr",
    words: &[
        ("bir", 15), ("ve", 14), ("bu", 8), ("da", 6), ("ne", 4), ("için", 4), ("ile", 4),
        ("çok", 4), ("ama", 3), ("gibi", 3), ("daha", 3), ("sonra", 3), ("kadar", 3),
        ("ben", 2), ("sen", 2), ("o", 2), ("biz", 2), ("var", 2), ("yok", 2), ("en", 2),
        ("diye", 2), ("küçük", 1), ("büyük", 1), ("güzel", 1), ("ev", 1), ("şehir", 1),
        ("çocuk", 1), ("deniz", 1), ("gün", 1), ("gece", 1), ("yıl", 1), ("zaman", 1),
        ("insan", 1), ("dünya", 1), ("hayat", 1), ("göz", 1), ("yol", 1), ("su", 1),
        ("kitap", 1), ("okul", 1), ("anne", 1), ("baba", 1), ("arkadaş", 1), ("şey", 1),
        ("kendi", 1), ("önce", 1), ("şimdi", 1), ("bütün", 1), ("yeni", 1), ("eski", 1),
        ("iyi", 1), ("kötü", 1),
    ],
};

pub const HU: LangSpec = LangSpec {
    code: "hu",
    words: &[
        ("a", 20), ("az", 12), ("és", 10), ("egy", 7), ("hogy", 6), ("nem", 6), ("is", 5),
        ("de", 4), ("van", 4), ("ez", 4), ("volt", 3), ("meg", 3), ("már", 3), ("csak", 3),
        ("el", 2), ("mint", 2), ("még", 2), ("ki", 2), ("vagy", 2), ("ha", 2), ("le", 2),
        ("minden", 2), ("én", 2), ("te", 1), ("ő", 1), ("mi", 1), ("nagyon", 1), ("szép", 1),
        ("jó", 1), ("rossz", 1), ("ház", 1), ("város", 1), ("ország", 1), ("ember", 1),
        ("gyerek", 1), ("család", 1), ("idő", 1), ("nap", 1), ("éjszaka", 1), ("év", 1),
        ("élet", 1), ("szív", 1), ("kéz", 1), ("szem", 1), ("víz", 1), ("föld", 1),
        ("tűz", 1), ("könyv", 1), ("iskola", 1), ("asztal", 1), ("ablak", 1), ("ajtó", 1),
        ("kutya", 1), ("macska", 1), ("madár", 1), ("virág", 1), ("fa", 1),
    ],
};

pub const PT: LangSpec = LangSpec {
    code: "pt",
    words: &[
        ("de", 16), ("a", 12), ("o", 12), ("que", 10), ("e", 10), ("do", 6), ("da", 6),
        ("em", 5), ("um", 4), ("para", 4), ("é", 4), ("com", 4), ("não", 4), ("uma", 3),
        ("os", 3), ("no", 3), ("se", 3), ("na", 3), ("por", 3), ("mais", 3), ("as", 2),
        ("dos", 2), ("como", 2), ("mas", 2), ("foi", 2), ("ao", 2), ("ele", 2), ("das", 2),
        ("tem", 2), ("à", 2), ("seu", 2), ("sua", 2), ("ou", 2), ("ser", 2), ("quando", 1),
        ("muito", 1), ("há", 1), ("já", 1), ("está", 1), ("eu", 1), ("também", 1), ("só", 1),
        ("pelo", 1), ("até", 1), ("isso", 1), ("ela", 1), ("entre", 1), ("era", 1),
        ("depois", 1), ("sem", 1), ("mesmo", 1), ("ter", 1), ("quem", 1), ("você", 1),
        ("tinha", 1), ("coração", 1), ("cidade", 1), ("país", 1), ("água", 1), ("criança", 1),
        ("português", 1), ("amanhã", 1),
    ],
};

pub const DA: LangSpec = LangSpec {
    code: "da",
    words: &[
        ("og", 15), ("i", 12), ("at", 10), ("det", 8), ("en", 7), ("den", 6), ("til", 6),
        ("er", 6), ("som", 5), ("på", 5), ("de", 4), ("med", 4), ("han", 4), ("af", 4),
        ("for", 4), ("ikke", 4), ("der", 3), ("var", 3), ("mig", 2), ("sig", 2), ("men", 2),
        ("et", 2), ("har", 2), ("om", 2), ("vi", 2), ("min", 2), ("havde", 2), ("ham", 2),
        ("hun", 2), ("nu", 2), ("over", 1), ("da", 1), ("fra", 1), ("du", 1), ("ud", 1),
        ("sin", 1), ("dem", 1), ("os", 1), ("op", 1), ("man", 1), ("hans", 1), ("hvor", 1),
        ("eller", 1), ("hvad", 1), ("skal", 1), ("selv", 1), ("her", 1), ("alle", 1),
        ("vil", 1), ("blev", 1), ("kunne", 1), ("ind", 1), ("når", 1), ("være", 1),
        ("noget", 1), ("ville", 1), ("deres", 1), ("efter", 1), ("skulle", 1), ("denne", 1),
        ("også", 1), ("under", 1), ("have", 1), ("hende", 1), ("meget", 1), ("været", 1),
        ("huset", 1), ("dag", 1), ("år", 1), ("børn", 1),
    ],
};

pub const NO: LangSpec = LangSpec {
    code: "no",
    words: &[
        ("og", 15), ("i", 12), ("det", 9), ("på", 6), ("som", 6), ("er", 6), ("en", 6),
        ("til", 6), ("å", 5), ("han", 4), ("av", 4), ("for", 4), ("med", 4), ("at", 4),
        ("var", 3), ("de", 3), ("ikke", 3), ("den", 3), ("har", 2), ("jeg", 2), ("om", 2),
        ("et", 2), ("men", 2), ("så", 2), ("seg", 2), ("hun", 2), ("hadde", 2), ("vi", 2),
        ("du", 1), ("kan", 1), ("da", 1), ("ble", 1), ("ut", 1), ("skal", 1), ("vil", 1),
        ("ham", 1), ("etter", 1), ("over", 1), ("ved", 1), ("også", 1), ("bare", 1),
        ("eller", 1), ("hva", 1), ("nå", 1), ("dette", 1), ("noe", 1), ("være", 1),
        ("meg", 1), ("mot", 1), ("opp", 1), ("der", 1), ("når", 1), ("inn", 1), ("dem", 1),
        ("kunne", 1), ("andre", 1), ("blir", 1), ("alle", 1), ("noen", 1), ("sin", 1),
        ("gikk", 1), ("kom", 1), ("år", 1), ("huset", 1), ("hele", 1), ("fikk", 1),
        ("barna", 1), ("dagen", 1),
    ],
};

pub const SV: LangSpec = LangSpec {
    code: "sv",
    words: &[
        ("och", 15), ("i", 11), ("att", 9), ("det", 8), ("som", 6), ("en", 6), ("på", 5),
        ("är", 5), ("av", 5), ("för", 4), ("med", 4), ("till", 4), ("den", 4), ("har", 3),
        ("de", 3), ("inte", 3), ("om", 3), ("ett", 3), ("han", 3), ("men", 2), ("var", 2),
        ("jag", 2), ("sig", 2), ("från", 2), ("vi", 2), ("så", 2), ("kan", 2), ("man", 2),
        ("när", 2), ("år", 1), ("säger", 1), ("hon", 1), ("under", 1), ("också", 1),
        ("efter", 1), ("eller", 1), ("nu", 1), ("sin", 1), ("där", 1), ("vid", 1),
        ("mot", 1), ("ska", 1), ("skulle", 1), ("kommer", 1), ("ut", 1), ("får", 1),
        ("finns", 1), ("vara", 1), ("hade", 1), ("alla", 1), ("andra", 1), ("mycket", 1),
        ("än", 1), ("här", 1), ("då", 1), ("sedan", 1), ("över", 1), ("bara", 1),
        ("in", 1), ("blir", 1), ("upp", 1), ("även", 1), ("vad", 1), ("få", 1), ("två", 1),
        ("vill", 1), ("hur", 1), ("mellan", 1), ("går", 1), ("genom", 1), ("något", 1),
        ("kunde", 1), ("första", 1), ("detta", 1), ("honom", 1), ("stora", 1),
        ("svenska", 1), ("hela", 1), ("barnen", 1), ("dagen", 1), ("huset", 1),
    ],
};

fn pick<'a>(words: &'a [(&'a str, u32)], rng: &mut ChaCha8Rng) -> &'a str {
    let total: u32 = words.iter().map(|(_, w)| w).sum();
    let mut x = rng.random_range(0..total);
    for (word, weight) in words {
        if x < *weight {
            return word;
        }
        x -= weight;
    }
    unreachable!("weighted pick exhausted the word list")
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// One raw synthetic sentence: 3–9 weighted words, capitalized first word,
/// an occasional comma, and a trailing period. Guaranteed to survive as at
/// least 10 characters after cleaning (the evaluation string length).
pub fn synth_sentence(spec: &LangSpec, rng: &mut ChaCha8Rng) -> String {
    let n_words = rng.random_range(3..=9);
    let mut words: Vec<String> = Vec::with_capacity(n_words);
    words.push(capitalize(pick(spec.words, rng)));
    for _ in 1..n_words {
        words.push(pick(spec.words, rng).to_string());
    }
    while words.iter().map(|w| w.chars().count() + 1).sum::<usize>() < 11 {
        words.push(pick(spec.words, rng).to_string());
    }
    if words.len() > 3 && rng.random_range(0..5) == 0 {
        let at = words.len() / 2;
        words[at].push(',');
    }
    let mut sentence = words.join(" ");
    sentence.push('.');
    sentence
}

/// `n` raw sentences, deterministic for `(spec, seed)`.
pub fn synth_sentences(spec: &LangSpec, n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ spec.code.bytes().fold(0u64, |acc, b| acc * 31 + b as u64));
    (0..n).map(|_| synth_sentence(spec, &mut rng)).collect()
}

/// `n` raw lines that stay at least `min_chars` characters long after
/// cleaning — fixtures for evaluation at longer string lengths.
pub fn synth_long_sentences(spec: &LangSpec, n: usize, min_chars: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ spec.code.bytes().fold(0u64, |acc, b| acc * 31 + b as u64) ^ 0x10f6,
    );
    (0..n)
        .map(|_| {
            let mut words = vec![capitalize(pick(spec.words, &mut rng))];
            while words.iter().map(|w| w.chars().count() + 1).sum::<usize>() <= min_chars {
                words.push(pick(spec.words, &mut rng).to_string());
            }
            let mut sentence = words.join(" ");
            sentence.push('.');
            sentence
        })
        .collect()
}

/// Cleans and trims raw sentences into `Sample`s, dropping empties — the
/// same path `prepare` uses.
pub fn synth_samples(spec: &LangSpec, lang: usize, n: usize, seed: u64) -> Vec<Sample> {
    synth_sentences(spec, n, seed)
        .into_iter()
        .filter_map(|raw| {
            let cleaned = clean_text(&raw);
            if cleaned.is_empty() {
                return None;
            }
            Some(Sample {
                text: trim_sample(&cleaned, MAX_SAMPLE_CHARS),
                lang,
            })
        })
        .collect()
}

/// A stratified folded dataset over several synthetic languages.
pub fn synth_dataset(specs: &[&LangSpec], per_lang: usize, folds: usize, seed: u64) -> FoldedDataset {
    let langs = LanguageSet::new(specs.iter().map(|s| s.code)).expect("valid codes");
    let mut samples = Vec::with_capacity(specs.len() * per_lang);
    for (lang, spec) in specs.iter().enumerate() {
        samples.extend(synth_samples(spec, lang, per_lang, seed));
    }
    FoldedDataset::assign_folds(samples, langs, folds, seed).expect("enough samples per fold")
}

/// Writes sentences as a minimal but grammatical CoNLL-U file: `# sent_id`
/// and `# text` metadata plus one 10-field token line per word.
pub fn write_conllu(path: &Path, sentences: &[String]) {
    let mut body = String::new();
    for (i, sentence) in sentences.iter().enumerate() {
        body.push_str(&format!("# sent_id = s{}\n# text = {sentence}\n", i + 1));
        for (t, token) in sentence.split_whitespace().enumerate() {
            let form = token.trim_matches(|c: char| c.is_ascii_punctuation());
            let form = if form.is_empty() { token } else { form };
            body.push_str(&format!(
                "{}\t{}\t{}\t_\t_\t_\t0\tdep\t_\t_\n",
                t + 1,
                form,
                form.to_lowercase()
            ));
        }
        body.push('\n');
    }
    std::fs::write(path, body).expect("write CoNLL-U fixture");
}

/// Writes sentences as a one-per-line corpus file.
pub fn write_lines(path: &Path, sentences: &[String]) {
    let mut body = sentences.join("\n");
    body.push('\n');
    std::fs::write(path, body).expect("write line fixture");
}
