//! Regenerates the bundled datasets in `crates/melm/data/`.
//!
//! ```text
//! cargo run -p melm --example make_data
//! ```

use std::path::Path;

use melm::io::write_atomic;
use melm_core::dataset::Label;
use melm_core::synthetic::{self, PlantedConfig};
use melm_core::LabeledDataset;

fn to_csv(ds: &LabeledDataset, header: Option<&[&str]>, names: (&str, &str)) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for (c, label) in ds.labels().iter().enumerate() {
        for r in 0..ds.dim() {
            out.push_str(&format!("{},", ds.points()[(r, c)]));
        }
        out.push_str(if *label == Label::Minus { names.0 } else { names.1 });
        out.push('\n');
    }
    out
}

fn to_libsvm(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    for (c, label) in ds.labels().iter().enumerate() {
        out.push_str(if *label == Label::Minus { "-1" } else { "+1" });
        for r in 0..ds.dim() {
            let v = ds.points()[(r, c)];
            if v != 0.0 {
                out.push_str(&format!(" {}:{v}", r + 1));
            }
        }
        out.push('\n');
    }
    out
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir).expect("create data directory");
    let write = |name: &str, text: String| write_atomic(&dir.join(name), text.as_bytes()).expect("write dataset");

    write("fourclass-synthetic.csv", to_csv(&synthetic::fourclass_like(0), None, ("-1", "1")));
    let bc = synthetic::breast_cancer_like(0);
    let header = ["f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10", "class"];
    write("breast-cancer-synthetic.csv", to_csv(&bc, Some(&header), ("2", "4")));

    let small_cfg = PlantedConfig { n_minus: 20, n_plus: 16, d: 4, ..Default::default() };
    let small = synthetic::planted_subspace(&small_cfg, 7).expect("valid generator settings");
    write("small.csv", to_csv(&small, Some(&["a", "b", "c", "d", "group"]), ("neg", "pos")));
    write("small.libsvm", to_libsvm(&small));
}
