//! Regenerates the golden polynomial dumps (run manually when the dump
//! schema changes): cargo run -p mrt-lab --example gen_golden
fn main() {
    for d in 0..=5usize {
        let dump = mrt_lab::polyfam::dump(d).unwrap();
        let path = format!("{}/tests/golden/poly_d{d}.json", env!("CARGO_MANIFEST_DIR"));
        std::fs::write(&path, serde_json::to_string_pretty(&dump).unwrap()).unwrap();
        println!("wrote {path}");
    }
}
