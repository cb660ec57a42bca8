//! Detect DO/PP datives in dependency-annotated utterances and profile
//! lemmas by alternation behavior.
//!
//! ```bash
//! cargo run --example extract_datives
//! ```

use dativesim::dative::{
    detect_all, load_lemma_list, parse_conllu_file, profile_alternation, Construction,
};

fn main() -> dativesim::Result<()> {
    let root = env!("CARGO_MANIFEST_DIR");
    let parses = parse_conllu_file(format!("{root}/tests/data/dative_fixture.conllu"))?;
    let lemmas = load_lemma_list(format!("{root}/data/dative_lemmas.txt"))?;

    let instances = detect_all(&parses, &lemmas);
    for inst in &instances {
        let p = parses.iter().find(|p| p.id == inst.utterance_id).unwrap();
        println!(
            "{} [{}] verb={} theme={:?} recipient={:?}",
            inst.utterance_id,
            inst.construction,
            inst.verb_lemma,
            p.span_text(inst.theme_span),
            p.span_text(inst.recipient_span),
        );
    }
    let do_n = instances
        .iter()
        .filter(|i| i.construction == Construction::Do)
        .count();
    println!("{} DO and {} PP instances", do_n, instances.len() - do_n);

    let alternating = load_lemma_list(format!("{root}/data/alternating_lemmas.txt"))?;
    let nonalternating = load_lemma_list(format!("{root}/data/nonalternating_lemmas.txt"))?;
    for p in profile_alternation(&instances, &alternating, &nonalternating)? {
        println!(
            "{}: DO {} / PP {} -> {}",
            p.lemma, p.do_count, p.pp_count, p.class
        );
    }
    Ok(())
}
