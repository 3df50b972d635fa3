//! Regenerates the bundled example datasets under `data/`.
//!
//! Usage: `cargo run -p ispca-cli --example make_toy_data [out_dir]`

use ispca_core::eval::{gen_toy1, gen_toy2};
use ispca_core::{Dataset, Target};

fn write_dataset(path: &std::path::Path, data: &Dataset) {
    let labels = match &data.target {
        Target::Binary(y) => y.iter().map(|&b| if b == 1 { "B" } else { "A" }).collect::<Vec<_>>(),
        _ => panic!("toy datasets are binary"),
    };
    let mut out = String::from("x1,x2,label\n");
    for (i, label) in labels.iter().enumerate() {
        let mut buf = ryu::Buffer::new();
        out.push_str(buf.format(data.features[[i, 0]]));
        out.push(',');
        let mut buf = ryu::Buffer::new();
        out.push_str(buf.format(data.features[[i, 1]]));
        out.push(',');
        out.push_str(label);
        out.push('\n');
    }
    std::fs::write(path, out).expect("write dataset");
    println!("wrote {}", path.display());
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::path::PathBuf::from("data"));
    std::fs::create_dir_all(&dir).expect("create out dir");
    write_dataset(&dir.join("toy1.csv"), &gen_toy1(1));
    write_dataset(&dir.join("toy2.csv"), &gen_toy2(1));
}
