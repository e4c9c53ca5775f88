//! Writes the city and membership-inference fixtures as CSV under the given directory.

use std::path::PathBuf;

use trajeval_core::mobility::write_csv;
use trajeval_testkit::fixtures::{default_city, mia_fixture, write_city_fixture};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).expect("create output dir");
    let files = write_city_fixture(&dir, &default_city());
    println!("{}\n{}", files.dataset.display(), files.layers.display());
    let m = mia_fixture(11);
    for (name, d) in [
        ("train", &m.d_train),
        ("target", &m.q_target),
        ("holdout", &m.holdout),
        ("aux", &m.d_aux),
    ] {
        let p = dir.join(format!("mia_{name}.csv"));
        write_csv(d, &p).expect("write");
        println!("{}", p.display());
    }
}
