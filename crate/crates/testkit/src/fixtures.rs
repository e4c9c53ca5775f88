//! Deterministic datasets and constraint layers for integration and acceptance tests.

use std::path::{Path, PathBuf};

use geo::{Geometry, LineString, Polygon};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajeval_core::metrics::{ConstraintLayers, RoadGraph};
use trajeval_core::mobility::{
    write_csv, CategoryId, CategoryVocabulary, Dataset, DatasetMeta, TrajPoint, Trajectory,
};

pub const CITY_LABELS: [&str; 5] = ["home", "work", "food", "shop", "leisure"];

/// District origins (south-west corner); each district is a 3 km road grid.
pub const DISTRICTS: [(f64, f64); 2] = [(0.0, 0.0), (12_000.0, 0.0)];
const BLOCK_M: f64 = 500.0;
const GRID_N: usize = 6;
/// A lake inside each district, between roads; the pier sits at its centre.
const LAKE: (f64, f64, f64, f64) = (1_100.0, 1_100.0, 1_400.0, 1_400.0);

struct Poi {
    x: f64,
    y: f64,
    category: CategoryId,
}

fn district_pois(d: usize) -> Vec<Poi> {
    let (ox, oy) = DISTRICTS[d];
    let mut pois = Vec::new();
    for i in 0..=GRID_N {
        for j in 0..=GRID_N {
            // categories in contiguous bands so most cells have a dominant label
            let band = (i / 2 + j / 3) % 4;
            pois.push(Poi {
                x: ox + i as f64 * BLOCK_M,
                y: oy + j as f64 * BLOCK_M,
                category: CategoryId(band as u16 + 1),
            });
        }
    }
    pois.push(Poi {
        x: ox + (LAKE.0 + LAKE.2) / 2.0,
        y: oy + (LAKE.1 + LAKE.3) / 2.0,
        category: CategoryId(4),
    });
    pois
}

/// Two-district synthetic city: `n_users` users split evenly over the districts,
/// `trajs_per_user` trajectories each, 4 to 10 visits per trajectory with revisits,
/// categorised points on the road network and integer timestamps. A few users visit
/// a pier inside a lake (an implausible location). Projected CRS, meters.
pub fn city_dataset(n_users: usize, trajs_per_user: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = CategoryVocabulary::new(CITY_LABELS).expect("distinct labels");
    let mut trajs = Vec::new();
    for u in 0..n_users {
        let d = u % 2;
        let pois = district_pois(d);
        let pier = pois.len() - 1;
        let road_pois = pier;
        let home = rng.random_range(0..road_pois);
        let work = rng.random_range(0..road_pois);
        let mut favourites: Vec<usize> = (0..3).map(|_| rng.random_range(0..road_pois)).collect();
        if u % 7 == 3 {
            favourites.push(pier);
        }
        for k in 0..trajs_per_user {
            let len = rng.random_range(4..=10);
            let mut visits = vec![home];
            while visits.len() < len {
                let r: f64 = rng.random();
                let next = if r < 0.3 {
                    home
                } else if r < 0.55 {
                    work
                } else {
                    *favourites.choose(&mut rng).expect("non-empty")
                };
                if *visits.last().expect("non-empty") != next {
                    visits.push(next);
                }
            }
            let week = (u * trajs_per_user + k) as i64;
            // Monday 2024-01-01 00:00 UTC plus whole weeks, start between 7 and 10 am
            let mut t = 1_704_067_200 + week * 604_800 + rng.random_range(7 * 3600..10 * 3600);
            let points = visits
                .iter()
                .enumerate()
                .map(|(n, &v)| {
                    if n > 0 {
                        t += rng.random_range(1_200..7_200);
                    }
                    let p = &pois[v];
                    let jitter = if v == pier { 0.0 } else { 4.0 };
                    let x = p.x + rng.random_range(-jitter..=jitter);
                    let y = p.y + rng.random_range(-jitter..=jitter);
                    let category = if v == home { CategoryId(0) } else { p.category };
                    TrajPoint::new(x.round(), y.round(), t as f64).with_category(category)
                })
                .collect();
            trajs.push(
                Trajectory::new(format!("c{u:03}-{k}"), format!("user{u:03}"), points)
                    .expect("valid trajectory"),
            );
        }
    }
    Dataset::new(trajs, DatasetMeta::projected("city").with_vocabulary(vocab))
        .expect("valid dataset")
}

/// The default acceptance-scale city: 60 users x 2 trajectories.
pub fn default_city() -> Dataset {
    city_dataset(60, 2, 7)
}

fn node(d: usize, i: usize, j: usize) -> String {
    format!("d{d}-{i}-{j}")
}

fn node_xy(d: usize, i: usize, j: usize) -> (f64, f64) {
    let (ox, oy) = DISTRICTS[d];
    (ox + i as f64 * BLOCK_M, oy + j as f64 * BLOCK_M)
}

/// Road grid of both districts plus a highway joining them; the lakes are the
/// implausible domain and the roads are the accessible infrastructure.
pub fn city_layers() -> ConstraintLayers {
    let mut edges = Vec::new();
    for d in 0..DISTRICTS.len() {
        for i in 0..=GRID_N {
            for j in 0..=GRID_N {
                let a = node_xy(d, i, j);
                if i < GRID_N {
                    let b = node_xy(d, i + 1, j);
                    edges.push((
                        node(d, i, j),
                        node(d, i + 1, j),
                        LineString::from(vec![a, b]),
                    ));
                }
                if j < GRID_N {
                    let b = node_xy(d, i, j + 1);
                    edges.push((
                        node(d, i, j),
                        node(d, i, j + 1),
                        LineString::from(vec![a, b]),
                    ));
                }
            }
        }
    }
    let mid = GRID_N / 2;
    edges.push((
        node(0, GRID_N, mid),
        node(1, 0, mid),
        LineString::from(vec![node_xy(0, GRID_N, mid), node_xy(1, 0, mid)]),
    ));
    let accessible = edges
        .iter()
        .map(|(_, _, l)| Geometry::LineString(l.clone()))
        .collect();
    let lakes = DISTRICTS
        .iter()
        .map(|&(ox, oy)| {
            Polygon::new(
                LineString::from(vec![
                    (ox + LAKE.0, oy + LAKE.1),
                    (ox + LAKE.2, oy + LAKE.1),
                    (ox + LAKE.2, oy + LAKE.3),
                    (ox + LAKE.0, oy + LAKE.3),
                    (ox + LAKE.0, oy + LAKE.1),
                ]),
                vec![],
            )
        })
        .collect();
    ConstraintLayers::new(
        lakes,
        accessible,
        RoadGraph::new(edges).expect("positive lengths"),
    )
}

/// Paths of a fixture written to disk.
pub struct CityFiles {
    pub dataset: PathBuf,
    pub layers: PathBuf,
}

/// Writes `city.csv` and a `layers/` directory under `dir`.
pub fn write_city_fixture(dir: &Path, d: &Dataset) -> CityFiles {
    let dataset = dir.join("city.csv");
    write_csv(d, &dataset).expect("write dataset");
    let layers = dir.join("layers");
    std::fs::create_dir_all(&layers).expect("layers dir");
    city_layers().write_dir(&layers).expect("write layers");
    CityFiles { dataset, layers }
}

/// Random-walk trajectories with unique ids and no duplicates: starts uniform in a
/// `box_m` square, `steps_m` step length, 5 to 8 visits.
pub fn random_walks(prefix: &str, n: usize, box_m: f64, step_m: f64, seed: u64) -> Vec<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(5..=8);
            let (mut x, mut y) = (rng.random_range(0.0..box_m), rng.random_range(0.0..box_m));
            let mut t = 1_704_067_200.0 + rng.random_range(0.0..86_400.0 * 28.0f64).round();
            let points = (0..len)
                .map(|k| {
                    if k > 0 {
                        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        x += step_m * a.cos();
                        y += step_m * a.sin();
                        t += rng.random_range(300.0..3_600.0f64).round();
                    }
                    TrajPoint::new(x, y, t)
                })
                .collect();
            Trajectory::new(
                format!("{prefix}{i:04}"),
                format!("{prefix}u{i:04}"),
                points,
            )
            .expect("valid walk")
        })
        .collect()
}

/// Disjoint sets for a membership-inference experiment.
pub struct MiaFixture {
    pub d_train: Dataset,
    pub q_target: Dataset,
    /// Non-member pool, never used by the target model.
    pub holdout: Dataset,
    pub d_aux: Dataset,
}

/// Short walks (8 visits, 10 m steps) anchored at the sites of a 1 km lattice
/// `cols` sites wide with its south-west corner at `origin`, sites shuffled over the
/// trajectories. Distinct records are at least about 850 m apart (Fréchet), so a
/// record never has a near duplicate.
pub fn lattice_walks(
    prefix: &str,
    n: usize,
    cols: usize,
    origin: (f64, f64),
    seed: u64,
) -> Vec<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = n.div_ceil(cols);
    let mut sites: Vec<usize> = (0..cols * rows).collect();
    sites.shuffle(&mut rng);
    sites
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, &s)| {
            let mut x = origin.0 + (s % cols) as f64 * 1_000.0;
            let mut y = origin.1 + (s / cols) as f64 * 1_000.0;
            let mut t = 1_704_067_200.0 + rng.random_range(0.0..86_400.0 * 28.0f64).round();
            let points = (0..8)
                .map(|k| {
                    if k > 0 {
                        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        x += 10.0 * a.cos();
                        y += 10.0 * a.sin();
                        t += rng.random_range(300.0..3_600.0f64).round();
                    }
                    TrajPoint::new(x, y, t)
                })
                .collect();
            Trajectory::new(
                format!("{prefix}{i:04}"),
                format!("{prefix}u{i:04}"),
                points,
            )
            .expect("valid walk")
        })
        .collect()
}

/// Disjoint lattice-walk sets. Targets and held-out records share one fully
/// occupied 20 x 10 block, assigned at random, so members and non-members are
/// exchangeable and the release covers half the block. Training records are fresh
/// walks over the same block (a generator learns the target distribution); the
/// auxiliary records fill a 20 x 20 block of their own. Every seed of an attack scores 100 members
/// and 100 non-members.
pub fn mia_fixture(seed: u64) -> MiaFixture {
    let meta = DatasetMeta::projected("walks");
    let dataset = |name: &str, trajs: Vec<Trajectory>| {
        let mut m = meta.clone();
        m.name = name.to_string();
        Dataset::new(trajs, m).expect("valid part")
    };
    let mut block = lattice_walks("q", 200, 20, (0.0, 0.0), seed);
    let holdout = block.split_off(100);
    MiaFixture {
        d_train: dataset("train", lattice_walks("d", 100, 20, (0.0, 0.0), seed + 1)),
        q_target: dataset("target", block),
        holdout: dataset("holdout", holdout),
        d_aux: dataset(
            "aux",
            lattice_walks("a", 400, 20, (30_000.0, 0.0), seed + 2),
        ),
    }
}

/// Users with a personal commute corridor: every trajectory of a user follows the
/// same home-to-work line with per-visit noise. Split per user into training and
/// target trajectories.
pub struct TulFixture {
    pub d_train: Dataset,
    pub q_target: Dataset,
}

pub fn tul_fixture(
    n_users: usize,
    train_per_user: usize,
    target_per_user: usize,
    noise_m: f64,
    seed: u64,
) -> TulFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut target = Vec::new();
    for u in 0..n_users {
        let home = (
            rng.random_range(0.0..6_000.0),
            rng.random_range(0.0..6_000.0),
        );
        let work = (
            rng.random_range(0.0..6_000.0),
            rng.random_range(0.0..6_000.0),
        );
        for k in 0..train_per_user + target_per_user {
            let len = 6;
            let start = 1_704_067_200.0 + (u * 100 + k) as f64 * 86_400.0 + 8.0 * 3600.0;
            let points = (0..len)
                .map(|s| {
                    let f = s as f64 / (len - 1) as f64;
                    let x = home.0 + f * (work.0 - home.0) + rng.random_range(-noise_m..=noise_m);
                    let y = home.1 + f * (work.1 - home.1) + rng.random_range(-noise_m..=noise_m);
                    TrajPoint::new(x, y, start + s as f64 * 600.0)
                })
                .collect();
            let t = Trajectory::new(format!("p{u:03}-{k}"), format!("user{u:03}"), points)
                .expect("valid trajectory");
            if k < train_per_user {
                train.push(t);
            } else {
                target.push(t);
            }
        }
    }
    TulFixture {
        d_train: Dataset::new(train, DatasetMeta::projected("tul-train")).expect("valid"),
        q_target: Dataset::new(target, DatasetMeta::projected("tul-target")).expect("valid"),
    }
}

/// Synthetic trajectories with centroids in two tight groups `separation_m` apart
/// (`per_cluster` each), and a real dataset drawn from the same two groups.
pub fn two_cluster_datasets(per_cluster: usize, separation_m: f64) -> (Dataset, Dataset) {
    let make = |name: &str, offset: f64| {
        let trajs = (0..2 * per_cluster)
            .map(|i| {
                let cx = if i < per_cluster { 0.0 } else { separation_m };
                let dx = (i % per_cluster) as f64 * 20.0 + offset;
                let points = (0..3)
                    .map(|k| {
                        TrajPoint::new(cx + dx + k as f64 * 10.0, k as f64 * 10.0, k as f64 * 60.0)
                    })
                    .collect();
                Trajectory::new(format!("{name}{i}"), format!("{name}u{i}"), points).expect("valid")
            })
            .collect();
        Dataset::new(trajs, DatasetMeta::projected(name)).expect("valid")
    };
    (make("syn", 0.0), make("real", 5.0))
}

/// Trajectories that cycle deterministically through `k` cells of `edge_m` along the
/// x axis, starting equally often from every cell, all of the same length. The
/// pooled chain is a permutation and the population flow is stationary.
pub fn cyclic_chain_dataset(k: usize, len: usize, copies: usize, edge_m: f64) -> Dataset {
    let mut trajs = Vec::new();
    for c in 0..copies {
        for s in 0..k {
            let points = (0..len)
                .map(|n| {
                    let cell = (s + n) % k;
                    TrajPoint::new((cell as f64 + 0.5) * edge_m, 0.5 * edge_m, n as f64 * 60.0)
                })
                .collect();
            trajs.push(
                Trajectory::new(format!("cy{c}-{s}"), format!("cu{c}-{s}"), points).expect("valid"),
            );
        }
    }
    Dataset::new(trajs, DatasetMeta::projected("cycle")).expect("valid")
}

/// Translates every point by `(dx, dy)`.
pub fn translated(d: &Dataset, dx: f64, dy: f64) -> Dataset {
    let trajs = d
        .trajectories()
        .iter()
        .map(|t| Trajectory {
            points: t
                .points
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    q.point.x += dx;
                    q.point.y += dy;
                    q.point.lat_lon = None;
                    q
                })
                .collect(),
            ..t.clone()
        })
        .collect();
    d.derive(format!("{}-shifted", d.meta().name), trajs)
        .expect("valid")
}
