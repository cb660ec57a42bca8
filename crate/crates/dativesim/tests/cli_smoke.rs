//! End-to-end smoke run of the command-line pipeline on fixture data.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dativesim")
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> std::process::Output {
    let out = Command::new(bin())
        .args(args)
        .output()
        .expect("binary should run");
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

struct Artifacts {
    dir: tempfile::TempDir,
    tok: PathBuf,
    model: PathBuf,
    stim: PathBuf,
    verbhood: PathBuf,
}

fn build_pipeline() -> Artifacts {
    let dir = tempfile::tempdir().unwrap();
    let tok = dir.path().join("tok.json");
    let model = dir.path().join("model.safetensors");
    let stim = dir.path().join("stimuli");
    let verbhood = dir.path().join("verbhood.jsonl");

    run(&[
        "train-tokenizer",
        "--corpus",
        &fixture("smoke_corpus.txt"),
        "--vocab-size",
        "384",
        "--out",
        tok.to_str().unwrap(),
    ]);
    run(&[
        "train-lm",
        "--corpus",
        &fixture("smoke_corpus.txt"),
        "--tokenizer",
        tok.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--seed",
        "1",
        "--scale",
        "smoke",
    ]);
    run(&[
        "gen-stimuli",
        "--lexicon",
        &data("lexicon.json"),
        "--cross-items",
        &data("cross_structure_items.json"),
        "--out-dir",
        stim.to_str().unwrap(),
        "--seed",
        "3",
        "--scale",
        "smoke",
        "--conllu",
        &fixture("dative_fixture.conllu"),
        "--keep-list",
        &fixture("smoke_keep.txt"),
        "--lemmas",
        &data("dative_lemmas.txt"),
    ]);
    run(&[
        "build-verbhood",
        "--conllu",
        &fixture("dative_fixture.conllu"),
        "--nonverb-slots",
        &fixture("smoke_nonverb_slots.txt"),
        "--n",
        "4",
        "--seed",
        "5",
        "--out",
        verbhood.to_str().unwrap(),
    ]);
    Artifacts {
        dir,
        tok,
        model,
        stim,
        verbhood,
    }
}

#[test]
fn unknown_command_exits_nonzero_with_usage() {
    let out = Command::new(bin()).arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage") || err.contains("unrecognized"));
}

#[test]
fn extract_datives_reports_fixture_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "extract-datives",
        "--conllu",
        &fixture("dative_fixture.conllu"),
        "--lemmas",
        &data("dative_lemmas.txt"),
        "--alternating",
        &data("alternating_lemmas.txt"),
        "--nonalternating",
        &data("nonalternating_lemmas.txt"),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("DO: 5 utterances, PP: 5"), "{stdout}");
    assert!(dir.path().join("instances.jsonl").exists());
    assert!(dir.path().join("profiles.json").exists());
}

#[test]
fn smoke_pipeline_runs_experiments_end_to_end() {
    let art = build_pipeline();
    assert!(art.stim.join("natural_gen.jsonl").exists());

    // nabanana must finish quickly and match a hand-run of the library calls
    let out_dir = art.dir.path().join("nabanana");
    let start = Instant::now();
    run(&[
        "run-experiment",
        "nabanana",
        "--tokenizer",
        art.tok.to_str().unwrap(),
        "--models",
        art.model.to_str().unwrap(),
        "--pools",
        &fixture("smoke_pools.json"),
        "--corpus",
        &fixture("smoke_corpus.txt"),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--scale",
        "smoke",
    ]);
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "smoke nabanana took {elapsed:?}, budget is 60s"
    );
    assert!(out_dir.join("deltas.csv").exists());
    assert!(out_dir.join("summary.csv").exists());
    assert!(out_dir.join("metadata.json").exists());

    // hand-run the same computation through the library and compare exports
    {
        use dativesim::corpus::{load_corpus, Split};
        use dativesim::experiments::{export_delta_csv, run_nabanana};
        use dativesim::lm::LanguageModel;
        use dativesim::stimuli::{build_nabanana_tests, load_verb_pools, NOVEL_SURFACE};
        use dativesim::tokenizer::SubwordTokenizer;

        let mut tok = SubwordTokenizer::load(&art.tok).unwrap();
        tok.set_novel_surface(NOVEL_SURFACE);
        let model = LanguageModel::load(&art.model).unwrap();
        let corpus = load_corpus(fixture("smoke_corpus.txt"), Split::Train).unwrap();
        let pools = load_verb_pools(fixture("smoke_pools.json")).unwrap();
        let items = build_nabanana_tests(&pools, &corpus).unwrap();
        let (records, _) = run_nabanana(&[(1, model)], &tok, &items, &[]).unwrap();
        let expected = art.dir.path().join("expected_deltas.csv");
        export_delta_csv(&records, &expected).unwrap();
        assert_eq!(
            std::fs::read(out_dir.join("deltas.csv")).unwrap(),
            std::fs::read(&expected).unwrap(),
            "CLI deltas must match the module-level computation byte for byte"
        );
    }

    // asymmetry: run twice, outputs must be byte-identical
    let asym = |name: &str| -> PathBuf {
        let out_dir = art.dir.path().join(name);
        run(&[
            "run-experiment",
            "asymmetry",
            "--tokenizer",
            art.tok.to_str().unwrap(),
            "--models",
            art.model.to_str().unwrap(),
            "--exposures",
            art.stim.join("exposures.jsonl").to_str().unwrap(),
            "--natural",
            art.stim.join("natural_gen.jsonl").to_str().unwrap(),
            "--synthetic",
            art.stim.join("synthetic_pairs.jsonl").to_str().unwrap(),
            "--verbhood",
            art.verbhood.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--scale",
            "smoke",
        ]);
        out_dir
    };
    let first = asym("asym1");
    let second = asym("asym2");
    let csv1 = std::fs::read(first.join("results.csv")).unwrap();
    let csv2 = std::fs::read(second.join("results.csv")).unwrap();
    assert_eq!(csv1, csv2, "identical inputs and seeds must give identical bytes");

    // export: records JSONL -> CSV reproduces the experiment's own CSV
    let re_export = art.dir.path().join("re_export.csv");
    run(&[
        "export",
        "--records",
        first.join("records.jsonl").to_str().unwrap(),
        "--out",
        re_export.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(&re_export).unwrap(), csv1);

    // summarize the exported CSV
    let summary_out = art.dir.path().join("summary.csv");
    let out = run(&[
        "summarize",
        "--csv",
        first.join("results.csv").to_str().unwrap(),
        "--by",
        "exposure_construction,gen_source",
        "--resamples",
        "200",
        "--out",
        summary_out.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("exposure_construction"), "{stdout}");
    assert!(summary_out.exists());
}

#[test]
fn data_root_env_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("smoke_corpus.txt"), dir.path().join("c.txt")).unwrap();
    let tok_out = dir.path().join("tok.json");
    let out = Command::new(bin())
        .env("DATIVESIM_DATA_ROOT", dir.path())
        .args([
            "train-tokenizer",
            "--corpus",
            "c.txt",
            "--vocab-size",
            "128",
            "--out",
            tok_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(tok_out.exists());
}
