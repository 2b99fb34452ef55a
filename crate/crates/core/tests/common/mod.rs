#![allow(dead_code)]

use std::io::Read;
use std::path::{Path, PathBuf};

use codemia::{Language, SourceSample};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(name)
}

/// The gzipped real-world file corpus.
pub fn realworld() -> Vec<SourceSample> {
    let file = std::fs::File::open(fixture("fixtures/realworld.ndjson.gz")).unwrap();
    let mut text = String::new();
    flate2::read::GzDecoder::new(file)
        .read_to_string(&mut text)
        .unwrap();
    text.lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[derive(Debug, Clone)]
pub struct GoldenCase {
    pub name: String,
    pub language: Language,
    pub content: String,
    pub weights: Vec<f64>,
}

fn code_weight(c: char) -> f64 {
    match c {
        '.' => 0.1,
        '1' => 1.0,
        '3' => 3.0,
        '5' => 5.0,
        'X' => 10.0,
        other => panic!("unknown weight code {other:?}"),
    }
}

/// Parses one `.golden` file: `=== name` opens a case, `> ` lines carry
/// content (each followed by a newline) and `= ` lines their weight codes.
pub fn parse_golden(language: Language, text: &str) -> Vec<GoldenCase> {
    let mut cases: Vec<GoldenCase> = Vec::new();
    let mut pending: Option<&str> = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(name) = line.strip_prefix("=== ") {
            cases.push(GoldenCase {
                name: name.trim().to_string(),
                language,
                content: String::new(),
                weights: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix('>') {
            assert!(pending.is_none(), "line {}: content without weights", i + 1);
            pending = Some(rest.strip_prefix(' ').unwrap_or(rest));
        } else if let Some(rest) = line.strip_prefix('=') {
            let content = pending
                .take()
                .unwrap_or_else(|| panic!("line {}: weights without content", i + 1));
            let codes = rest.strip_prefix(' ').unwrap_or(rest);
            assert_eq!(
                codes.chars().count(),
                content.chars().count() + 1,
                "line {}",
                i + 1
            );
            let case = cases.last_mut().expect("case header");
            case.content.push_str(content);
            case.content.push('\n');
            case.weights.extend(codes.chars().map(code_weight));
        }
    }
    assert!(pending.is_none(), "trailing content line");
    cases
}

pub fn golden_corpus() -> Vec<GoldenCase> {
    let files = [
        ("python", Language::Python),
        ("java", Language::Java),
        ("go", Language::Go),
        ("ruby", Language::Ruby),
        ("rust", Language::Rust),
    ];
    files
        .iter()
        .flat_map(|(file, lang)| {
            let text = std::fs::read_to_string(fixture(&format!("golden/{file}.golden"))).unwrap();
            parse_golden(*lang, &text)
        })
        .collect()
}

/// Renders weights back into codes for readable failure messages.
pub fn codes(weights: &[f64]) -> String {
    weights
        .iter()
        .map(|w| match *w {
            w if w == 0.1 => '.',
            w if w == 1.0 => '1',
            w if w == 3.0 => '3',
            w if w == 5.0 => '5',
            w if w == 10.0 => 'X',
            _ => '?',
        })
        .collect()
}

/// Mismatching golden cases as printable reports.
pub fn golden_mismatches(cases: &[GoldenCase]) -> Vec<String> {
    cases
        .iter()
        .filter_map(|case| {
            let sample = SourceSample::new(case.name.clone(), case.language, case.content.clone());
            let mask = codemia::build_mask(&sample, None);
            let got = mask.materialize();
            (got != case.weights).then(|| {
                format!(
                    "{} {}:\n{}\nexpected {}\n     got {}",
                    case.language,
                    case.name,
                    case.content.escape_debug(),
                    codes(&case.weights),
                    codes(&got)
                )
            })
        })
        .collect()
}

use codemia::probe::{Dataset, Mlp};
use codemia::Label;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Two clusters: members around (+1, +1), non-members around (-1, -1),
/// jittered by N(0, 0.3²) per coordinate. Classes alternate.
pub fn separable_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let member = i % 2 == 0;
        let centre = if member { 1.0 } else { -1.0 };
        rows.push(
            (0..2)
                .map(|_| centre + 0.3 * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
        labels.push(Label::from(member));
    }
    let ids = (0..n).map(|i| format!("s{i:04}")).collect();
    Dataset::new(ids, rows, labels).unwrap()
}

/// Worst relative error between analytic gradients and central finite
/// differences (step 1e-5) for a random small probe.
pub fn gradient_check_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, h, n) = (
        rng.gen_range(2..7),
        rng.gen_range(2..9),
        rng.gen_range(3..12),
    );
    let mut mlp = Mlp::init(d, h, &mut rng);
    mlp.b1.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
    mlp.b2 = rng.gen_range(-0.5..0.5);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let y = Array1::from_shape_fn(n, |_| f64::from(rng.gen_bool(0.5) as u8));

    let analytic = mlp.loss_and_gradients(x.view(), y.view()).1.to_flat();
    let base = mlp.to_flat();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut probe = mlp.clone();
        let mut p = base.clone();
        p[i] = base[i] + step;
        probe.set_flat(&p);
        let up = probe.loss(x.view(), y.view());
        p[i] = base[i] - step;
        probe.set_flat(&p);
        let down = probe.loss(x.view(), y.view());
        let numeric = (up - down) / (2.0 * step);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7);
        worst = worst.max(err);
    }
    worst
}
