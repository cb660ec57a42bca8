//! Generate the full factorial stimulus set and print the design counts.
//!
//! ```bash
//! cargo run --example generate_stimuli
//! ```

use dativesim::stimuli::{
    add_givenness, build_cross_structure_stimuli, dual_felicitous_configs,
    enumerate_feature_configs, generate_exposures, generate_synthetic_generalization,
    theoretical_feature_configs, CrossStructureItems, Lexicon, GIVENNESS_TEMPLATES,
    NOVEL_SURFACE, PAIRS_PER_CONFIG,
};

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn main() -> dativesim::Result<()> {
    let lexicon = Lexicon::load(data("lexicon.json"))?;
    println!("theoretical configurations: {}", theoretical_feature_configs().len());

    let configs = enumerate_feature_configs(&lexicon)?;
    println!("realizable configurations:  {}", configs.len());

    let exposures =
        generate_exposures(&lexicon, &configs, PAIRS_PER_CONFIG, NOVEL_SURFACE, 7)?;
    println!("exposure sentences:         {}", exposures.len());
    println!("  e.g. {:?}", exposures[0].text);

    let given = add_givenness(&exposures, &GIVENNESS_TEMPLATES)?;
    println!("givenness sentences:        {}", given.len());
    println!("  e.g. {:?}", given[0].text);

    println!(
        "dual-felicitous configs:    {}",
        dual_felicitous_configs(&lexicon)?.len()
    );
    let pairs = generate_synthetic_generalization(&lexicon, &exposures, 10, NOVEL_SURFACE, 11)?;
    println!("synthetic pairs:            {}", pairs.len());

    let items = CrossStructureItems::load(data("cross_structure_items.json"))?;
    let cross = build_cross_structure_stimuli(&items, 30, NOVEL_SURFACE, 5)?;
    println!("cross-structure stimuli:    {}", cross.len());
    println!("  e.g. {:?}", cross[0].stimulus.text);
    Ok(())
}
