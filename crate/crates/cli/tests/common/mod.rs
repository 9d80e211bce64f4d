#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bestshot_core::interval::Interval;
use bestshot_core::io::{save_jsonl, save_matrix, PoseRecord};
use bestshot_core::kinematics::Skeleton;
use bestshot_core::metrics::{Category, QueryAnnotation};
use bestshot_core::retrieval::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[path = "../../../core/tests/common/mod.rs"]
pub mod posegen;

pub fn bestshot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bestshot"))
        .args(args)
        .env_remove("CAPTIONER_API_TOKEN")
        .output()
        .expect("spawn bestshot")
}

/// Runs the binary and returns stdout, panicking with stderr on failure.
pub fn bestshot_ok(args: &[&str]) -> String {
    let out = bestshot(args);
    assert!(
        out.status.success(),
        "bestshot {args:?} failed ({}): {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub fn arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn write_poses(path: &Path, count: usize, seed: u64) {
    let s = Skeleton::smpl22();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: Vec<PoseRecord> = (0..count)
        .map(|i| PoseRecord {
            id: format!("p{i:03}"),
            dataset: "synthetic".into(),
            frame_index: i,
            joints: posegen::random_pose(&mut rng, &s).joints,
            rotations: None,
            description: None,
        })
        .collect();
    save_jsonl(path, &records).unwrap();
}

/// One query of the retrieval fixture: the argmax frame is planted at
/// `offset` frames from the ground truth's reference point.
struct Plant {
    category: Category,
    offset: i64,
    hit: bool,
}

pub const PROTOCOL_LENGTH: usize = 60;
const KEY_FRAME: usize = 30;
const GT: (usize, usize) = (24, 36);

pub struct ProtocolFixture {
    pub annotations: PathBuf,
    pub queries: PathBuf,
    pub frames_dir: PathBuf,
    /// Expected (hits, total) per category name.
    pub expected: Vec<(Category, usize, usize)>,
}

impl ProtocolFixture {
    pub fn expected_overall(&self) -> (usize, usize) {
        self.expected
            .iter()
            .fold((0, 0), |(h, t), (_, eh, et)| (h + eh, t + et))
    }
}

fn plants() -> Vec<Plant> {
    let mut v = Vec::new();
    // Pose: key frame 30, tolerance 4 either side; misses sit one frame past it.
    for (offset, hit) in [
        (0, true),
        (4, true),
        (-4, true),
        (3, true),
        (-2, true),
        (1, true),
        (-1, true),
        (2, true),
        (5, false),
        (-5, false),
    ] {
        v.push(Plant {
            category: Category::Pose,
            offset,
            hit,
        });
    }
    // Content and Action: interval 24..=36 with no margin; offsets from 24.
    for (offset, hit) in [
        (0, true),
        (12, true),
        (6, true),
        (3, true),
        (9, true),
        (1, true),
        (11, true),
        (5, true),
        (8, true),
        (-1, false),
    ] {
        v.push(Plant {
            category: Category::Content,
            offset,
            hit,
        });
    }
    for (offset, hit) in [
        (0, true),
        (12, true),
        (7, true),
        (2, true),
        (10, true),
        (4, true),
        (8, true),
        (-1, false),
        (13, false),
        (20, false),
    ] {
        v.push(Plant {
            category: Category::Action,
            offset,
            hit,
        });
    }
    v
}

fn unit(v: [f32; 3], dims: usize) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    let mut out = vec![0.0; dims];
    out[..3].iter_mut().zip(v).for_each(|(o, x)| *o = x / n);
    out
}

/// 30 queries, 10 per category, each with its own video. Frame `f` of a
/// video embeds as a rotation away from the query by an angle that grows
/// with the distance from the planted frame, so the argmax is the plant.
pub fn protocol_fixture(dir: &Path) -> ProtocolFixture {
    const DIMS: usize = 8;
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).unwrap();
    let mut anns = Vec::new();
    let mut queries = Vec::new();
    for (i, p) in plants().into_iter().enumerate() {
        let video_id = format!("vid{i:02}");
        let reference = if p.category == Category::Pose {
            KEY_FRAME
        } else {
            GT.0
        };
        let target = (reference as i64 + p.offset) as usize;
        let rows: Vec<Vec<f32>> = (0..PROTOCOL_LENGTH)
            .map(|f| {
                let angle = 0.02 * f.abs_diff(target) as f32;
                unit(
                    [angle.cos(), angle.sin(), 0.1 * (i as f32).sin() * angle],
                    DIMS,
                )
            })
            .collect();
        save_matrix(
            &frames_dir.join(format!("{video_id}.shotmat")),
            &Matrix::from_rows(&rows).unwrap(),
        )
        .unwrap();
        queries.push(unit([1.0, 0.0, 0.0], DIMS));
        anns.push((
            p.hit,
            QueryAnnotation {
                query_id: format!("q{i:02}"),
                video_id,
                category: p.category,
                query: format!("synthetic query {i}"),
                intervals: if p.category == Category::Pose {
                    Vec::new()
                } else {
                    vec![Interval::new(GT.0, GT.1).unwrap()]
                },
                key_frame: (p.category == Category::Pose).then_some(KEY_FRAME),
                video_length: PROTOCOL_LENGTH,
                fine_category: None,
                frame_rate: None,
            },
        ));
    }
    let expected = [Category::Content, Category::Action, Category::Pose]
        .into_iter()
        .map(|c| {
            let of_c = anns.iter().filter(|(_, a)| a.category == c);
            (c, of_c.clone().filter(|(h, _)| *h).count(), of_c.count())
        })
        .collect();
    let annotations = dir.join("annotations.jsonl");
    let anns: Vec<QueryAnnotation> = anns.into_iter().map(|(_, a)| a).collect();
    save_jsonl(&annotations, &anns).unwrap();
    let queries_path = dir.join("queries.shotmat");
    save_matrix(&queries_path, &Matrix::from_rows(&queries).unwrap()).unwrap();
    ProtocolFixture {
        annotations,
        queries: queries_path,
        frames_dir,
        expected,
    }
}
