//! One PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use mddgen::corpus::{extract_ngrams, read_corpus, write_ngrams_tsv};
use mddgen::curation::ppl_from_probability;
use mddgen::model::validate_sentence;
use mddgen::pipeline::{RANKED_FILE, SOLUTIONS_FILE};
use mddgen::{compile, refine, ConstraintModel, Mdd, NgramIndex, NgramLanguageModel, PathCost, RadnerVariant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))
}

fn sum_example() -> Outcome {
    let started = Instant::now();
    let oracle = fig1_tuples(5, 9);
    let tuples: Vec<Vec<(String, PathCost)>> = oracle
        .iter()
        .map(|t| t.iter().map(|&v| (v.to_string(), PathCost::from(vec![v]))).collect())
        .collect();
    let mdd = Mdd::from_tuples(3, 1, &tuples).map_err(|e| e.to_string())?;
    ensure(mdd.contains(&["7", "0", "2"]), "rejects (7,0,2)")?;
    ensure(!mdd.contains(&["1", "0", "2"]), "accepts (1,0,2)")?;
    let count = mdd.count_solutions();
    ensure(count == BigUint::from(oracle.len()), format!("{count} vs oracle {}", oracle.len()))?;
    ensure(oracle.len() == 15, format!("oracle counts {}", oracle.len()))?;
    within(Duration::from_secs(1), started)?;
    Ok(format!("15 solutions in {:?}", started.elapsed()))
}

fn compiler_completeness() -> Outcome {
    let started = Instant::now();
    let lex = toy_lexicon();
    let model = toy_model();
    let recs = records("toy_corpus.txt", 3, &lex);
    let index = NgramIndex::build(&recs).map_err(|e| e.to_string())?;
    let (mdd, _) = compile(&model, &index, &lex).map_err(|e| e.to_string())?;
    let got = sentences(&mdd);
    let oracle = oracle_solutions(&model, &recs, &lex);
    ensure(!oracle.is_empty(), "oracle found no sentence")?;
    ensure(got == oracle, format!("compile {} vs oracle {}", got.len(), oracle.len()))?;
    within(Duration::from_secs(30), started)?;
    Ok(format!("{} sentences, equal to brute force", got.len()))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_mddgen"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        o.status.success(),
        format!("mddgen {}: {}", args[0], String::from_utf8_lossy(&o.stderr)),
    )
}

fn soundness_audit() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let lex = radner_lexicon();
    let recs = records("radner_corpus.txt", 4, &lex);
    let ngrams = dir.path().join("r4.tsv");
    fs::write(&ngrams, write_ngrams_tsv(&recs)).map_err(|e| e.to_string())?;
    let out = dir.path().join("core");
    let overrides = data("syllables.tsv");
    run_cli(&[
        "solve",
        "--ngrams",
        ngrams.to_str().unwrap(),
        "--preset",
        "radner",
        "--overrides",
        overrides.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ])?;
    let index = NgramIndex::build(&recs).map_err(|e| e.to_string())?;
    let model = ConstraintModel::radner(RadnerVariant::Core);
    let sols = fs::read_to_string(out.join(SOLUTIONS_FILE)).map_err(|e| e.to_string())?;
    let mut total = 0;
    for line in sols.lines() {
        total += 1;
        let tokens = mddgen::corpus::split_rendered(line);
        let report = validate_sentence(&model, &tokens, &index, &lex);
        ensure(report.overall, format!("`{line}` fails:\n{}", report.to_tsv()))?;
    }
    ensure(total >= 1, "no solution to audit")?;
    Ok(format!("{total}/{total} sentences pass"))
}

fn reduction_canonicity() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for i in 0..100 {
        let layers = rng.gen_range(1..7);
        let count = rng.gen_range(0..60);
        let tuples = random_tuples(&mut rng, layers, 4, count);
        let mdd = Mdd::from_tuples(layers, 1, &tuples).map_err(|e| e.to_string())?;
        ensure(has_unique_signatures(&mdd), format!("set {i}: duplicate signatures"))?;
        let expected: BTreeSet<Vec<String>> = tuples
            .iter()
            .map(|t| t.iter().map(|(l, _)| l.clone()).collect())
            .collect();
        ensure(sentences(&mdd) == expected, format!("set {i}: path set changed"))?;
    }
    within(Duration::from_secs(10), started)?;
    Ok(format!("100 sets in {:?}", started.elapsed()))
}

fn intersection_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xa11ce);
    for i in 0..50 {
        let layers = rng.gen_range(1..6);
        let (na, nb) = (rng.gen_range(0..40), rng.gen_range(0..40));
        let a = Mdd::from_tuples(layers, 1, &random_tuples(&mut rng, layers, 3, na)).map_err(|e| e.to_string())?;
        let b = Mdd::from_tuples(layers, 1, &random_tuples(&mut rng, layers, 3, nb)).map_err(|e| e.to_string())?;
        let both = a.intersect(&b).map_err(|e| e.to_string())?;
        let expected: BTreeSet<_> = sentences(&a).intersection(&sentences(&b)).cloned().collect();
        ensure(sentences(&both) == expected, format!("pair {i} differs"))?;
    }
    Ok("50 pairs equal".into())
}

fn radner_setup() -> Result<(mddgen::Lexicon, NgramIndex), String> {
    let lex = radner_lexicon();
    let recs = records("radner_corpus.txt", 4, &lex);
    let index = NgramIndex::build(&recs).map_err(|e| e.to_string())?;
    Ok((lex, index))
}

fn refinement_equivalence() -> Outcome {
    let (lex, index) = radner_setup()?;
    let compiled = |v| compile(&ConstraintModel::radner(v), &index, &lex).map_err(|e| e.to_string());
    let (core, _) = compiled(RadnerVariant::Core)?;
    let (spanish, _) = compiled(RadnerVariant::Spanish)?;
    let refined = refine(&core, &[RadnerVariant::Spanish.first_word()], &lex).map_err(|e| e.to_string())?;
    let (a, b) = (sentences(&spanish), sentences(&refined));
    ensure(a == b, format!("direct {} vs refined {}", a.len(), b.len()))?;
    ensure(!a.is_empty(), "no spanish solution to compare")?;
    Ok(format!("{} sentences both ways", a.len()))
}

fn fixed_token_collapse() -> Outcome {
    let (lex, index) = radner_setup()?;
    let (mdd, _) = compile(&ConstraintModel::radner(RadnerVariant::Core), &index, &lex).map_err(|e| e.to_string())?;
    ensure(!mdd.is_empty(), "core preset has no solution")?;
    let labels = mdd.layer_labels(7);
    ensure(labels == vec![","], format!("layer 8 labels {labels:?}"))?;
    Ok("layer 8 = {\",\"}".into())
}

fn ppl_formula() -> Outcome {
    let v = ppl_from_probability(1.0 / 16.0, 4);
    ensure(((v - 2.0) / 2.0).abs() <= 1e-12, format!("ppl(1/16, 4) = {v}"))?;
    let mut rng = StdRng::seed_from_u64(16);
    for _ in 0..1000 {
        let n = rng.gen_range(1..100);
        let (a, b): (f64, f64) = (rng.gen_range(1e-300..1.0), rng.gen_range(1e-300..1.0));
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if hi > lo {
            ensure(
                ppl_from_probability(hi, n) < ppl_from_probability(lo, n),
                format!("not monotone at ({hi}, {lo}, {n})"),
            )?;
        }
    }
    Ok(format!("ppl = {v}, 1000 monotone pairs"))
}

fn lm_ranking() -> Outcome {
    let sentences = read_corpus(data("toy_corpus.txt")).map_err(|e| e.to_string())?;
    let (recs, _) = extract_ngrams(&sentences, 3).map_err(|e| e.to_string())?;
    let lm = NgramLanguageModel::train(&recs, 0.1).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(20);
    let trials: Vec<&Vec<String>> = sentences.iter().filter(|s| s.len() >= 4).take(20).collect();
    ensure(trials.len() == 20, "fewer than 20 trial sentences")?;
    let wins = trials
        .iter()
        .filter(|s| lm.perplexity(s) < lm.perplexity(&shuffled(&mut rng, s)))
        .count();
    ensure(wins >= 18, format!("{wins}/20"))?;
    Ok(format!("{wins}/20 wins"))
}

fn run_once(dir: &Path, name: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = dir.join(name);
    let cfg = dir.join(format!("{name}.json"));
    let body = format!(
        r#"{{"corpus": "{}", "order": 4, "overrides": ["{}"], "preset": "radner", "output": "{}"}}"#,
        data("radner_corpus.txt").display(),
        data("syllables.tsv").display(),
        out.display()
    );
    fs::write(&cfg, body).map_err(|e| e.to_string())?;
    run_cli(&["run", "--config", cfg.to_str().unwrap()])?;
    let read = |f: &str| fs::read(out.join(f)).map_err(|e| e.to_string());
    Ok((read(SOLUTIONS_FILE)?, read(RANKED_FILE)?))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = run_once(dir.path(), "first")?;
    let b = run_once(dir.path(), "second")?;
    ensure(a.0 == b.0, "solutions differ")?;
    ensure(a.1 == b.1, "ranked files differ")?;
    ensure(!a.0.is_empty(), "empty solutions file")?;
    Ok(format!("{} + {} identical bytes", a.0.len(), a.1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("sum-example oracle", sum_example),
        ("compiler completeness", compiler_completeness),
        ("soundness audit", soundness_audit),
        ("reduction canonicity", reduction_canonicity),
        ("intersection oracle", intersection_oracle),
        ("refinement equivalence", refinement_equivalence),
        ("fixed-token collapse", fixed_token_collapse),
        ("ppl formula", ppl_formula),
        ("built-in LM ranking", lm_ranking),
        ("run determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
