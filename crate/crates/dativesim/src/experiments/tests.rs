use std::collections::BTreeMap;

use crate::corpus::{Split, UtteranceCorpus};
use crate::dative::{AlternationClass, AlternationProfile, Construction};
use crate::lm::{LanguageModel, ModelConfig, Precision};
use crate::novel::learn_exposure_from;
use crate::stimuli::{
    AlternationTestItem, Animacy, ArgumentFeatures, CrossStructureItems, Definiteness,
    ExposureStimulus, FeatureConfig, GenSource, GeneralizationItem, Givenness, Length,
    LexiconEntry, Pronominality, Role, SyntheticPair,
};
use crate::tokenizer::SubwordTokenizer;
use crate::verbhood::{SlotClass, SlotSentence, VerbhoodSet};

use super::*;

fn smoke_setup() -> (LanguageModel, SubwordTokenizer, VerbhoodSet) {
    let corpus = UtteranceCorpus::from_utterances(
        [
            "she gave the ball to me",
            "you gave papa an apple",
            "louise painted that",
            "he wants a ball",
            "mommy found the cup",
            "daddy sent a letter to grandma",
        ],
        Split::Train,
    )
    .unwrap();
    let mut tok = SubwordTokenizer::train(&corpus, 128).unwrap();
    tok.set_novel_surface("[pilked]");
    let cfg = ModelConfig {
        layers: 2,
        heads: 2,
        embed_dim: 8,
        ffn_dim: 16,
        vocab_size: tok.vocab_size(),
        max_seq_len: 48,
        dropout: 0.0,
        layer_norm_eps: 1e-5,
        precision: Precision::F32,
    };
    let model = LanguageModel::init(cfg, 5).unwrap();
    let vset = VerbhoodSet::new(
        vec![
            SlotSentence {
                text: "louise ___ that".into(),
                slot_index: 1,
                class: SlotClass::VerbExpecting,
            },
            SlotSentence {
                text: "mommy ___ the cup".into(),
                slot_index: 1,
                class: SlotClass::VerbExpecting,
            },
        ],
        vec![
            SlotSentence {
                text: "he wants a ___".into(),
                slot_index: 3,
                class: SlotClass::NonVerbExpecting,
            },
            SlotSentence {
                text: "you gave papa an ___".into(),
                slot_index: 4,
                class: SlotClass::NonVerbExpecting,
            },
        ],
    )
    .unwrap();
    (model, tok, vset)
}

fn entry(surface: &str, features: ArgumentFeatures, role: Role) -> LexiconEntry {
    LexiconEntry {
        surface: surface.into(),
        features,
        roles: [role].into_iter().collect(),
    }
}

fn positive_features() -> ArgumentFeatures {
    ArgumentFeatures {
        pronominality: Pronominality::Pronoun,
        animacy: Animacy::Animate,
        definiteness: Definiteness::Definite,
        length: Length::Short,
    }
}

fn make_stimulus(id: &str, construction: Construction, givenness: Givenness) -> ExposureStimulus {
    let agent_f = ArgumentFeatures {
        pronominality: Pronominality::Nominal,
        animacy: Animacy::Animate,
        definiteness: Definiteness::Definite,
        length: Length::Short,
    };
    let text = match construction {
        Construction::Do => "mommy [pilked] me her.",
        Construction::Pp => "mommy [pilked] her to me.",
    };
    ExposureStimulus {
        id: id.into(),
        construction,
        agent: entry("mommy", agent_f, Role::Agent),
        theme: entry("her", positive_features(), Role::Theme),
        recipient: entry("me", positive_features(), Role::Recipient),
        config: FeatureConfig {
            theme: positive_features(),
            recipient: positive_features(),
            givenness,
        },
        preamble: None,
        text: text.into(),
    }
}

fn gen_items() -> Vec<GeneralizationItem> {
    vec![
        GeneralizationItem {
            id: "nat-1".into(),
            construction: Construction::Do,
            source: GenSource::Natural,
            text: "you [pilked] papa an apple".into(),
        },
        GeneralizationItem {
            id: "nat-2".into(),
            construction: Construction::Do,
            source: GenSource::Natural,
            text: "mommy [pilked] me the cup".into(),
        },
        GeneralizationItem {
            id: "nat-3".into(),
            construction: Construction::Pp,
            source: GenSource::Natural,
            text: "she [pilked] the ball to me".into(),
        },
        GeneralizationItem {
            id: "nat-4".into(),
            construction: Construction::Pp,
            source: GenSource::Natural,
            text: "daddy [pilked] a letter to grandma".into(),
        },
    ]
}

fn syn_pairs() -> Vec<SyntheticPair> {
    let cfg = FeatureConfig {
        theme: positive_features(),
        recipient: positive_features(),
        givenness: Givenness::None,
    };
    vec![SyntheticPair {
        pair_id: "syn0".into(),
        config: cfg,
        do_item: GeneralizationItem {
            id: "syn0-do".into(),
            construction: Construction::Do,
            source: GenSource::Synthetic,
            text: "daddy [pilked] grandma the cup.".into(),
        },
        pp_item: GeneralizationItem {
            id: "syn0-pp".into(),
            construction: Construction::Pp,
            source: GenSource::Synthetic,
            text: "daddy [pilked] the cup to grandma.".into(),
        },
    }]
}

#[test]
fn delta_of_identical_sentences_is_zero() {
    let (model, tok, _) = smoke_setup();
    let d = delta_preference(&model, &tok, "she gave the ball to me", "she gave the ball to me")
        .unwrap();
    assert_eq!(d, 0.0);
}

#[test]
fn uniform_model_gives_zero_delta_for_any_pair() {
    let (mut model, tok, _) = smoke_setup();
    let v = model.config().vocab_size;
    let d = model.config().embed_dim;
    let row = model.embedding().narrow(0, 0, 1).unwrap();
    let emb = row.broadcast_as((v, d)).unwrap().contiguous().unwrap();
    model.set_embedding(emb).unwrap();
    let delta = delta_preference(
        &model,
        &tok,
        "you gave papa an apple",
        "she gave the ball to me",
    )
    .unwrap();
    assert!(delta.abs() < 1e-9, "delta = {delta}");
}

#[test]
fn delta_is_exactly_antisymmetric() {
    let (model, tok, _) = smoke_setup();
    let a = "you gave papa an apple";
    let o = "she gave the ball to me";
    let d1 = delta_preference(&model, &tok, a, o).unwrap();
    let d2 = delta_preference(&model, &tok, o, a).unwrap();
    assert_eq!(d1, -d2);
}

#[test]
fn empty_sentence_is_an_error() {
    let (model, tok, _) = smoke_setup();
    assert!(delta_preference(&model, &tok, "", "x").is_err());
}

fn naba_item() -> AlternationTestItem {
    AlternationTestItem {
        lemma: "deliver".into(),
        past: "delivered".into(),
        class: AlternationClass::Naba,
        observed: Construction::Pp,
        agent: "mommy".into(),
        theme: "the ball".into(),
        recipient: "me".into(),
        do_text: "mommy delivered me the ball.".into(),
        pp_text: "mommy delivered the ball to me.".into(),
    }
}

#[test]
fn nabanana_singleton_summary_equals_single_delta() {
    let (model, tok, _) = smoke_setup();
    let items = vec![naba_item()];
    let models = vec![(1u64, model)];
    let (records, summary) = run_nabanana(&models, &tok, &items, &[]).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].deltas.len(), 1);
    // PP-observed: delta = mean(do) - mean(pp)
    let by_hand = delta_preference(
        &models[0].1,
        &tok,
        "mommy delivered me the ball.",
        "mommy delivered the ball to me.",
    )
    .unwrap();
    assert!((records[0].mean_delta - by_hand).abs() < 1e-9);
    assert_eq!(summary.rows.len(), 1);
    assert!((summary.rows[0].mean - by_hand).abs() < 1e-9);
    assert!((summary.rows[0].ci_lower - by_hand).abs() < 1e-9);
    assert!((summary.rows[0].ci_upper - by_hand).abs() < 1e-9);
}

#[test]
fn nabanana_summary_matches_brute_force_recomputation() {
    let (model, tok, _) = smoke_setup();
    let mut item2 = naba_item();
    item2.theme = "an apple".into();
    item2.do_text = "mommy delivered me an apple.".into();
    item2.pp_text = "mommy delivered an apple to me.".into();
    let items = vec![naba_item(), item2];
    let model2 = LanguageModel::init(model.config().clone(), 77).unwrap();
    let models = vec![(1u64, model), (2u64, model2)];
    let (records, summary) = run_nabanana(&models, &tok, &items, &[]).unwrap();
    assert_eq!(records.len(), 2); // one lemma x two seeds
    let pooled: Vec<f64> = records.iter().flat_map(|r| r.deltas.clone()).collect();
    let brute = pooled.iter().sum::<f64>() / pooled.len() as f64;
    assert!((summary.rows[0].mean - brute).abs() < 1e-12);
    assert_eq!(summary.rows[0].n, 4);
}

#[test]
fn profiled_verb_without_items_is_an_error() {
    let (model, tok, _) = smoke_setup();
    let profiles = vec![AlternationProfile {
        lemma: "promise".into(),
        do_count: 1,
        pp_count: 0,
        class: AlternationClass::Naba,
    }];
    let models = vec![(1u64, model)];
    assert!(run_nabanana(&models, &tok, &[naba_item()], &profiles).is_err());
}

#[test]
fn asymmetry_with_no_trials_is_empty() {
    let (model, tok, vset) = smoke_setup();
    let models = vec![(1u64, model)];
    let records = run_asymmetry(
        &models,
        &tok,
        &[],
        &gen_items(),
        &syn_pairs(),
        &vset,
        &TrialSettings::smoke(),
    )
    .unwrap();
    assert!(records.is_empty());
}

#[test]
fn asymmetry_records_alternate_construction_on_both_sources() {
    let (model, tok, vset) = smoke_setup();
    let models = vec![(1u64, model)];
    let stimuli = vec![
        make_stimulus("t-do", Construction::Do, Givenness::None),
        make_stimulus("t-pp", Construction::Pp, Givenness::None),
    ];
    let records = run_asymmetry(
        &models,
        &tok,
        &stimuli,
        &gen_items(),
        &syn_pairs(),
        &vset,
        &TrialSettings::smoke(),
    )
    .unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        assert_eq!(r.gen_means.len(), 2);
        let alt = r.exposure_construction.other();
        for g in &r.gen_means {
            assert_eq!(g.gen_construction, alt);
            assert!(g.mean_logprob_per_token < 0.0);
        }
        assert_eq!(r.experiment, "asymmetry");
    }
    // record completeness: every (seed, stimulus) pair appears exactly once
    let mut seen = BTreeMap::new();
    for r in &records {
        *seen.entry((r.seed, r.trial_id.clone())).or_insert(0) += 1;
    }
    assert!(seen.values().all(|&c| c == 1));
}

#[test]
fn group_means_match_brute_force() {
    let (model, tok, vset) = smoke_setup();
    let models = vec![(1u64, model)];
    let stimuli = vec![
        make_stimulus("t-do", Construction::Do, Givenness::None),
        make_stimulus("t-pp", Construction::Pp, Givenness::None),
    ];
    let records = run_asymmetry(
        &models,
        &tok,
        &stimuli,
        &gen_items(),
        &syn_pairs(),
        &vset,
        &TrialSettings::smoke(),
    )
    .unwrap();
    let summary =
        summarize_records(&records, &["exposure_construction", "gen_source"], 100, 3).unwrap();
    for row in &summary.rows {
        let want_exposure = &row.group[0].1;
        let want_source = &row.group[1].1;
        let mut vals = Vec::new();
        for r in &records {
            if r.exposure_construction.to_string() != *want_exposure {
                continue;
            }
            for g in &r.gen_means {
                if g.gen_source.to_string() == *want_source {
                    vals.push(g.mean_logprob_per_token);
                }
            }
        }
        let brute = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((row.mean - brute).abs() < 1e-12);
        assert_eq!(row.n, vals.len());
    }
}

#[test]
fn argmax_variant_selection() {
    assert_eq!(select_best_variant(&[0.1, 0.3, 0.2]), Some(1));
    assert_eq!(select_best_variant(&[f64::NAN, f64::NAN]), None);
    assert_eq!(select_best_variant(&[f64::NAN, 0.5]), Some(1));
}

#[test]
fn cross_structure_keeps_argmax_variant() {
    let (model, tok, vset) = smoke_setup();
    let items = CrossStructureItems {
        agents: vec!["mommy".into(), "daddy".into()],
        animate_nouns: vec!["cat".into(), "dog".into()],
        inanimate_nouns: vec!["ball".into(), "cup".into()],
    };
    let stimuli =
        crate::stimuli::build_cross_structure_stimuli(&items, 1, "[pilked]", 3).unwrap();
    assert_eq!(stimuli.len(), 24); // 1 set x 6 variants x 2 constructions x 2 animacy
    let models = vec![(1u64, model)];
    let settings = TrialSettings {
        lr_grid: vec![0.05],
        max_epochs: 1,
        init_seed: 0,
    };
    let natural_do: Vec<GeneralizationItem> = gen_items()
        .into_iter()
        .filter(|g| g.construction == Construction::Do)
        .collect();
    let kept =
        run_cross_structure(&models, &tok, &stimuli, &natural_do, &vset, &settings).unwrap();
    assert_eq!(kept.len(), 4); // one per (construction x animacy) cell

    // brute-force scan: rerun each variant's trial and confirm the kept one
    // has the maximal verbhood delta within its cell
    let vset_enc = vset.encode(&tok).unwrap();
    for group in &kept {
        let cell: Vec<&crate::stimuli::CrossStructureStimulus> = stimuli
            .iter()
            .filter(|s| {
                s.stimulus.construction == group.exposure_construction
                    && stimuli
                        .iter()
                        .find(|x| x.stimulus.id == group.trial_id)
                        .map(|x| x.theme_animacy)
                        .unwrap()
                        == s.theme_animacy
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        for s in cell {
            let init_seed = super::trial_init_seed(1, 0, &s.stimulus.id);
            let row0 = crate::novel::init_novel_embedding(&models[0].1, init_seed).unwrap();
            let trial = crate::novel::ExposureTrial::new(s.stimulus.clone(), init_seed)
                .with_grid(settings.lr_grid.clone(), settings.max_epochs);
            let state =
                learn_exposure_from(&models[0].1, &tok, &trial, &vset_enc, &row0).unwrap();
            best = best.max(state.verbhood_delta);
        }
        assert!(
            (group.verbhood_delta - best).abs() < 1e-12,
            "kept {} but cell max is {best}",
            group.verbhood_delta
        );
    }
}

#[test]
fn main_simulation_codes_positive_features_as_plus_one() {
    let (model, tok, vset) = smoke_setup();
    let models = vec![(1u64, model)];
    let stim = make_stimulus("t-main", Construction::Pp, Givenness::Theme);
    let records = run_main_simulation(
        &models,
        &tok,
        &[stim],
        &gen_items(),
        &vset,
        &TrialSettings::smoke(),
    )
    .unwrap();
    assert_eq!(records.len(), 1);
    let f = &records[0].features;
    assert_eq!(
        (f.pron_theme, f.anim_theme, f.def_theme, f.len_theme),
        (1, 1, 1, 1)
    );
    assert_eq!(f.givenness, Some(1));
    // unmodeled construction only
    assert_eq!(records[0].gen_means.len(), 1);
    assert_eq!(records[0].gen_means[0].gen_construction, Construction::Do);
}

#[test]
fn csv_export_roundtrip_and_determinism() {
    let (model, tok, vset) = smoke_setup();
    let models = vec![(1u64, model)];
    let stimuli = vec![
        make_stimulus("t-do", Construction::Do, Givenness::None),
        make_stimulus("t-pp", Construction::Pp, Givenness::Theme),
    ];
    let records = run_asymmetry(
        &models,
        &tok,
        &stimuli,
        &gen_items(),
        &syn_pairs(),
        &vset,
        &TrialSettings::smoke(),
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    export_csv(&records, &p1).unwrap();
    export_csv(&records, &p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

    let parsed = parse_csv(&p1).unwrap();
    assert_eq!(parsed, records);

    let text = std::fs::read_to_string(&p1).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, CSV_COLUMNS.join(","));
}

#[test]
fn single_record_exports_header_plus_rows() {
    let rec = TrialRecord {
        seed: 3,
        trial_id: "t".into(),
        experiment: "main".into(),
        exposure_construction: Construction::Do,
        features: CodedFeatures {
            pron_theme: 1,
            anim_theme: -1,
            def_theme: 1,
            len_theme: 1,
            pron_recip: -1,
            anim_recip: 1,
            def_recip: -1,
            len_recip: 1,
            givenness: None,
        },
        best_lr: 0.01,
        best_epoch: 4,
        verbhood_delta: 0.25,
        gen_means: vec![GenMean {
            gen_construction: Construction::Pp,
            gen_source: GenSource::Natural,
            mean_logprob_per_token: -4.5,
        }],
    };
    let f = tempfile::NamedTempFile::new().unwrap();
    export_csv(std::slice::from_ref(&rec), f.path()).unwrap();
    let text = std::fs::read_to_string(f.path()).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(parse_csv(f.path()).unwrap(), vec![rec]);
}

#[test]
fn nonfinite_scores_roundtrip_and_are_excluded_from_summaries() {
    let mut rec = TrialRecord {
        seed: 1,
        trial_id: "t".into(),
        experiment: "main".into(),
        exposure_construction: Construction::Do,
        features: CodedFeatures {
            pron_theme: 1,
            anim_theme: 1,
            def_theme: 1,
            len_theme: 1,
            pron_recip: 1,
            anim_recip: 1,
            def_recip: 1,
            len_recip: 1,
            givenness: Some(-1),
        },
        best_lr: 0.01,
        best_epoch: 1,
        verbhood_delta: 0.0,
        gen_means: vec![GenMean {
            gen_construction: Construction::Pp,
            gen_source: GenSource::Natural,
            mean_logprob_per_token: f64::NEG_INFINITY,
        }],
    };
    let f = tempfile::NamedTempFile::new().unwrap();
    export_csv(std::slice::from_ref(&rec), f.path()).unwrap();
    let parsed = parse_csv(f.path()).unwrap();
    assert_eq!(parsed[0].gen_means[0].mean_logprob_per_token, f64::NEG_INFINITY);

    rec.gen_means.push(GenMean {
        gen_construction: Construction::Pp,
        gen_source: GenSource::Synthetic,
        mean_logprob_per_token: -2.0,
    });
    let summary = summarize_records(&[rec], &["experiment"], 50, 0).unwrap();
    assert_eq!(summary.excluded_nonfinite, 1);
    assert_eq!(summary.rows[0].n, 1);
}

#[test]
fn summarize_single_value_has_degenerate_interval() {
    let values = vec![(vec![("k".to_string(), "a".to_string())], 2.5)];
    let t = summarize_values(&values, 1000, 9).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0].mean, 2.5);
    assert_eq!(t.rows[0].ci_lower, 2.5);
    assert_eq!(t.rows[0].ci_upper, 2.5);
    assert_eq!(t.rows[0].n, 1);
}

#[test]
fn summarize_two_groups_has_two_rows() {
    let values = vec![
        (vec![("k".to_string(), "a".to_string())], 1.0),
        (vec![("k".to_string(), "b".to_string())], 2.0),
    ];
    let t = summarize_values(&values, 100, 9).unwrap();
    assert_eq!(t.rows.len(), 2);
}

#[test]
fn unknown_grouping_key_is_an_error() {
    assert!(summarize_records(&[], &["nope"], 10, 0).is_err());
}

#[test]
fn aggregation_is_order_invariant() {
    let values: Vec<(Vec<(String, String)>, f64)> = (0..10)
        .map(|i| {
            (
                vec![("g".to_string(), (i % 2).to_string())],
                i as f64 * 0.5 - 2.0,
            )
        })
        .collect();
    let mut reversed = values.clone();
    reversed.reverse();
    let a = summarize_values(&values, 500, 4).unwrap();
    let b = summarize_values(&reversed, 500, 4).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert_eq!(ra.group, rb.group);
        assert_eq!(ra.mean, rb.mean);
        assert_eq!(ra.ci_lower, rb.ci_lower);
        assert_eq!(ra.ci_upper, rb.ci_upper);
    }
}
