//! Drives the command-line interface from a JSON config and replays the run
//! from the manifest it writes.

use std::fs;

fn main() {
    let dir = std::env::temp_dir().join("cmaqf_cli_example");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let config = serde_json::json!({
        "schema_version": 1,
        "subcommand": "kernel-export",
        "kernel": { "type": "carma", "a": [3.0, 2.0], "b": [3.0, 1.0], "q": 1 },
        "delta": 1.0,
        "output_dir": dir.join("first"),
        "export": { "start": 0.0, "step": 0.25, "count": 9 }
    });
    let cfg = dir.join("config.json");
    fs::write(&cfg, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let args = ["cmaqf", "kernel-export", "--config", cfg.to_str().unwrap()];
    let code = cmaqf::cli::run(args.iter().map(std::ffi::OsString::from));
    println!("exit code {code}");
    print!("{}", fs::read_to_string(dir.join("first/kernel.csv")).unwrap());

    let manifest = dir.join("first/manifest.json");
    let replay = dir.join("second");
    let args = ["cmaqf", "kernel-export", "--config", manifest.to_str().unwrap(), "--out", replay.to_str().unwrap()];
    let code = cmaqf::cli::run(args.iter().map(std::ffi::OsString::from));
    let same = fs::read(dir.join("first/kernel.csv")).unwrap() == fs::read(replay.join("kernel.csv")).unwrap();
    println!("replay exit code {code}, identical output: {same}");
}
