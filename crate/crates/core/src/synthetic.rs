//! Seeded synthetic benchmarks: a topic-planted idea corpus and Gaussian blobs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::corpus::{ingest_str, Corpus, InputFormat, Item};
use crate::error::Result;

const TOPICS: [[&str; 10]; 15] = [
    [
        "compost", "worm", "soil", "scrap", "bin", "humus", "mulch", "peel", "nitrogen", "decay",
    ],
    [
        "festival", "music", "stage", "ticket", "parade", "crowd", "dance", "tent", "carnival",
        "banner",
    ],
    [
        "website", "forum", "online", "profile", "login", "server", "browser", "upload", "chat",
        "hashtag",
    ],
    [
        "school",
        "pupil",
        "teacher",
        "classroom",
        "lesson",
        "cafeteria",
        "principal",
        "homework",
        "recess",
        "curriculum",
    ],
    [
        "truck",
        "delivery",
        "route",
        "driver",
        "cargo",
        "depot",
        "freight",
        "logistics",
        "dispatch",
        "courier",
    ],
    [
        "fence", "orchard", "fruit", "apple", "pear", "plum", "cherry", "graft", "pruning",
        "blossom",
    ],
    [
        "cinema",
        "movie",
        "screen",
        "projector",
        "film",
        "popcorn",
        "audience",
        "trailer",
        "premiere",
        "director",
    ],
    [
        "recipe", "chef", "kitchen", "oven", "spice", "bake", "knife", "sauce", "flavor", "stove",
    ],
    [
        "fish", "river", "net", "boat", "harbor", "catch", "trout", "salmon", "dock", "tide",
    ],
    [
        "bee", "hive", "honey", "pollen", "nectar", "swarm", "queen", "wax", "apiary", "buzz",
    ],
    [
        "label", "barcode", "package", "sticker", "certif", "trace", "origin", "stamp", "seal",
        "tag",
    ],
    [
        "clinic", "nurse", "vitamin", "diet", "obesity", "doctor", "patient", "calorie", "allergy",
        "diabet",
    ],
    [
        "solar",
        "panel",
        "battery",
        "greenhouse",
        "heater",
        "insulation",
        "turbine",
        "watt",
        "grid",
        "thermal",
    ],
    [
        "coin", "loan", "credit", "bank", "invest", "budget", "saving", "donor", "grant", "fund",
    ],
    [
        "church",
        "volunteer",
        "shelter",
        "pantry",
        "charity",
        "homeless",
        "donation",
        "meal",
        "soup",
        "neighbor",
    ],
];

const GENERAL: [&str; 24] = [
    "idea",
    "local",
    "food",
    "people",
    "community",
    "farmer",
    "produce",
    "city",
    "program",
    "network",
    "help",
    "share",
    "fresh",
    "grow",
    "connect",
    "market",
    "project",
    "family",
    "support",
    "healthy",
    "event",
    "space",
    "group",
    "access",
];

/// Items over `topics` planted topics (at most 15). Each text mixes mostly
/// topic words with a few general food-system words; applause is log-normal
/// and larger for the first three topics.
pub fn synthetic_ideas(n_items: usize, topics: usize, seed: u64) -> Vec<Item> {
    let topics = topics.clamp(1, TOPICS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let applause = LogNormal::new(2.0, 0.8).expect("valid parameters");
    (0..n_items)
        .map(|i| {
            let topic = if i < topics {
                i
            } else {
                rng.gen_range(0..topics)
            };
            let words = &TOPICS[topic];
            let title: Vec<&str> = words.choose_multiple(&mut rng, 3).copied().collect();
            let mut text: Vec<&str> = (0..14).map(|_| *words.choose(&mut rng).unwrap()).collect();
            text.extend((0..6).map(|_| *GENERAL.choose(&mut rng).unwrap()));
            text.shuffle(&mut rng);
            let boost: f64 = if topic < 3 { 4.0 } else { 1.0 };
            let quality = (boost * applause.sample(&mut rng)).round();
            Item {
                id: format!("idea-{i:03}"),
                title: title.join(" "),
                text: text.join(" "),
                quality,
            }
        })
        .collect()
}

/// The shipped 200-item, 15-topic benchmark, as written by
/// `synthetic_ideas(200, 15, 2017)`.
pub const BENCHMARK_JSONL: &str = include_str!("../data/synthetic_ideas.jsonl");

/// The benchmark corpus, vectorized.
pub fn benchmark_corpus() -> Result<Corpus> {
    ingest_str(BENCHMARK_JSONL, InputFormat::Jsonl, "synthetic_ideas.jsonl")?.vectorize()
}

/// Labelled Gaussian point clouds.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub ids: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// `per_cluster` isotropic Gaussian samples (standard deviation `std`) around each center.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_cluster: usize, std: f64, seed: u64) -> Blobs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, std).expect("finite std");
    let mut blobs = Blobs {
        ids: Vec::new(),
        points: Vec::new(),
        labels: Vec::new(),
    };
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            blobs.ids.push(format!("p{}", blobs.ids.len()));
            blobs
                .points
                .push(center.iter().map(|c| c + noise.sample(&mut rng)).collect());
            blobs.labels.push(label);
        }
    }
    blobs
}

/// Fifteen clusters on a jittered 5×3 grid with spacing 10, similar in layout to the
/// classic S-sets clustering benchmarks.
pub fn fifteen_blob_centers() -> Vec<Vec<f64>> {
    (0..15)
        .map(|c| {
            vec![
                10.0 * (c % 5) as f64 + 2.0 * ((c * 7) % 3) as f64,
                10.0 * (c / 5) as f64,
            ]
        })
        .collect()
}
