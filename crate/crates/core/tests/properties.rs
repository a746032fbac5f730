//! Property tests pinning the crate's cross-cutting invariants against
//! independent brute-force oracles.

use std::collections::BTreeSet;

use proptest::prelude::*;

use toolplan_core::corpusforge::{
    build_benchmark, check_leakage, scan_artifacts, strip_markup, BenchTask, ForgeInput, RenameMap,
};
use toolplan_core::evaluator::{f1_score, normalize_plan, MatchMode};
use toolplan_core::llmclient::{extract_plan, CommandPlan};
use toolplan_core::progdsl::{ProgramAst, Step, Value};
use toolplan_core::registry::{DemoExample, ToolRegistry, ToolSpec};
use toolplan_core::retriever::{truncate_words, word_count, RetrievalConfig, RetrievalIndex};

// ---------------------------------------------------------------------------
// retrieval vs dense cosine oracle
// ---------------------------------------------------------------------------

/// Dense TF-IDF cosine ranking computed from scratch, independent of the
/// sparse index implementation.
fn dense_oracle(docs: &[(String, String)], question: &str, k: usize) -> Vec<(String, f64)> {
    let tokenize = |text: &str| -> Vec<String> {
        text.to_ascii_lowercase()
            .split(|c: char| {
                !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
            })
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    let mut vocab: Vec<String> = Vec::new();
    let mut doc_tokens: Vec<Vec<String>> = Vec::new();
    for (_, text) in docs {
        let tokens = tokenize(text);
        for token in &tokens {
            if !vocab.contains(token) {
                vocab.push(token.clone());
            }
        }
        doc_tokens.push(tokens);
    }
    let df: Vec<usize> = vocab
        .iter()
        .map(|term| {
            doc_tokens
                .iter()
                .filter(|tokens| tokens.contains(term))
                .count()
        })
        .collect();
    let n = docs.len() as f64;
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    let weigh = |tokens: &[String]| -> Vec<f64> {
        vocab
            .iter()
            .enumerate()
            .map(|(i, term)| {
                let tf = tokens.iter().filter(|t| *t == term).count() as f64;
                tf * idf[i]
            })
            .collect()
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    // query vector over in-vocabulary terms only
    let query_tokens: Vec<String> = tokenize(question)
        .into_iter()
        .filter(|t| vocab.contains(t))
        .collect();
    let q = weigh(&query_tokens);
    let qn = norm(&q);
    if qn == 0.0 {
        return Vec::new();
    }

    let mut scored: Vec<(usize, i64, f64)> = doc_tokens
        .iter()
        .enumerate()
        .map(|(i, tokens)| {
            let d = weigh(tokens);
            let dn = norm(&d);
            let score = if dn == 0.0 {
                0.0
            } else {
                let dot: f64 = q.iter().zip(&d).map(|(a, b)| a * b).sum();
                (dot / (qn * dn)).clamp(0.0, 1.0)
            };
            // the ranking contract quantizes the key so mathematical ties
            // resolve by insertion order regardless of summation order
            (i, (score * 1e12).round() as i64, score)
        })
        .filter(|&(_, key, _)| key > 0)
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .map(|(i, _, s)| (docs[i].0.clone(), s))
        .collect()
}

fn word_pool() -> Vec<&'static str> {
    vec![
        "pubsub",
        "topic",
        "make",
        "delete",
        "list",
        "compute",
        "disk",
        "network",
        "bucket",
        "deploy",
        "service",
        "account",
        "project",
        "region",
        "--port",
        "--schedule",
        "speech",
        "model",
        "video",
        "subnet",
        "update",
        "config",
        "env",
        "job",
        "queue",
        "node",
        "image",
    ]
}

fn corpus_strategy() -> impl Strategy<Value = (Vec<(String, String)>, String)> {
    let pool = word_pool();
    let word = proptest::sample::select(pool);
    let doc_text = proptest::collection::vec(word.clone(), 1..12).prop_map(|ws| ws.join(" "));
    let docs = proptest::collection::vec(doc_text, 1..50).prop_map(|texts| {
        texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| (format!("doc-{i:02}"), text))
            .collect::<Vec<_>>()
    });
    let question = proptest::collection::vec(word, 1..6).prop_map(|ws| ws.join(" "));
    (docs, question)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn query_matches_dense_oracle((docs, question) in corpus_strategy()) {
        let index = RetrievalIndex::build(&docs, RetrievalConfig::default()).unwrap();
        let got = index.query(&question, 10);
        let want = dense_oracle(&docs, &question, 10);
        prop_assert_eq!(got.len(), want.len());
        for ((got_id, got_score), (want_id, want_score)) in got.iter().zip(&want) {
            prop_assert_eq!(got_id, want_id);
            prop_assert!((got_score - want_score).abs() < 1e-9,
                "score mismatch for {}: {} vs {}", got_id, got_score, want_score);
        }
        for (_, score) in &got {
            prop_assert!((0.0..=1.0).contains(score));
        }
    }

    #[test]
    fn truncate_returns_min_n_words(text in "\\PC{0,200}", n in 1usize..50) {
        let truncated = truncate_words(&text, n);
        prop_assert_eq!(word_count(&truncated), n.min(word_count(&text)));
        prop_assert_eq!(truncate_words(&truncated, n), truncated.clone());
    }

    /// Removing a document that matches nothing cannot change which
    /// documents match: membership depends only on sharing a query term.
    /// (Relative order among near-ties can shift, because removal perturbs
    /// idf weights inside other documents' norms.)
    #[test]
    fn non_matching_doc_removal_keeps_match_set((docs, question) in corpus_strategy()) {
        let index = RetrievalIndex::build(&docs, RetrievalConfig::default()).unwrap();
        let matched: Vec<String> =
            index.query(&question, docs.len()).into_iter().map(|(id, _)| id).collect();
        let non_matching: Vec<&(String, String)> =
            docs.iter().filter(|(id, _)| !matched.contains(id)).collect();
        prop_assume!(!non_matching.is_empty() && docs.len() >= 2);
        let dropped = &non_matching[0].0;
        let reduced: Vec<(String, String)> =
            docs.iter().filter(|(id, _)| id != dropped).cloned().collect();
        let reduced_index = RetrievalIndex::build(&reduced, RetrievalConfig::default()).unwrap();
        let mut reduced_matched: Vec<String> =
            reduced_index.query(&question, reduced.len()).into_iter().map(|(id, _)| id).collect();
        let mut expected = matched.clone();
        expected.sort();
        reduced_matched.sort();
        prop_assert_eq!(reduced_matched, expected);
    }
}

// ---------------------------------------------------------------------------
// f1 vs maximum-matching oracle
// ---------------------------------------------------------------------------

/// Exhaustive maximum bipartite matching size over exact-equality edges.
fn max_matching_size(pred: &[String], gold: &[String]) -> usize {
    fn go(pred: &[String], gold: &[String], i: usize, used: u64) -> usize {
        if i == pred.len() {
            return 0;
        }
        let mut best = go(pred, gold, i + 1, used);
        for (j, gold_line) in gold.iter().enumerate() {
            if used & (1 << j) == 0 && pred[i] == *gold_line {
                best = best.max(1 + go(pred, gold, i + 1, used | (1 << j)));
            }
        }
        best
    }
    go(pred, gold, 0, 0)
}

fn plan_strategy(max_lines: usize) -> impl Strategy<Value = Vec<String>> {
    let line = proptest::sample::select(vec![
        "llmcloud config set project p",
        "llmcloud run deploy x",
        "llmutil cp a b",
        "llmcloud pubsub topics make t",
        "ffmpeg -i in.mp4 out.wav",
        "llmcloud iam grant r",
    ]);
    proptest::collection::vec(line.prop_map(str::to_string), 0..=max_lines)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn greedy_f1_equals_max_matching(
        pred_lines in plan_strategy(6),
        gold_lines in plan_strategy(6),
    ) {
        prop_assume!(!gold_lines.is_empty());
        let pred = CommandPlan::from_lines(pred_lines.clone());
        let gold = CommandPlan::from_lines(gold_lines.clone());
        let result = f1_score(&pred, &gold, MatchMode::Exact).unwrap();
        let optimal = max_matching_size(&pred.lines, &gold.lines);
        prop_assert_eq!(result.matched.len(), optimal);
        prop_assert!((0.0..=1.0).contains(&result.f1));
        // F1 = 1 exactly when the normalized multisets coincide
        let mut a = pred.lines.clone();
        let mut b = gold.lines.clone();
        a.sort();
        b.sort();
        prop_assert_eq!(result.f1 == 1.0, a == b);
    }

    #[test]
    fn f1_invariant_under_line_permutation(
        lines in plan_strategy(5),
        gold_lines in plan_strategy(5),
        seed in 0u64..1000,
    ) {
        prop_assume!(!gold_lines.is_empty());
        let mut shuffled = lines.clone();
        // cheap deterministic shuffle
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 7)) % n;
                shuffled.swap(i, j);
            }
        }
        let gold = CommandPlan::from_lines(gold_lines);
        let a = f1_score(&CommandPlan::from_lines(lines), &gold, MatchMode::Exact).unwrap();
        let b = f1_score(&CommandPlan::from_lines(shuffled), &gold, MatchMode::Exact).unwrap();
        prop_assert_eq!(a.f1, b.f1);
    }
}

// ---------------------------------------------------------------------------
// renaming and leakage
// ---------------------------------------------------------------------------

fn token_strategy() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,8}[a-z0-9]".prop_map(|s| s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn rename_is_idempotent_when_targets_are_not_sources(
        pairs in proptest::collection::btree_map(token_strategy(), token_strategy(), 1..6),
        words in proptest::collection::vec(token_strategy(), 0..30),
    ) {
        let sources: BTreeSet<String> = pairs.keys().cloned().collect();
        prop_assume!(pairs.values().all(|t| !sources.contains(t)));
        let map = RenameMap::new(pairs.into_iter().collect()).unwrap();
        let text = words.join(" ");
        let once = map.apply(&text);
        prop_assert_eq!(map.apply(&once), once.clone());
    }

    #[test]
    fn single_token_rename_preserves_token_count(
        pairs in proptest::collection::btree_map(token_strategy(), token_strategy(), 1..6),
        words in proptest::collection::vec(token_strategy(), 1..30),
    ) {
        let map = RenameMap::new(pairs.into_iter().collect()).unwrap();
        let text = words.join(" ");
        let renamed = map.apply(&text);
        prop_assert_eq!(renamed.split_whitespace().count(), text.split_whitespace().count());
    }

    #[test]
    fn strip_markup_is_idempotent(raw in "(\\PC|<p>|</p>|<b attr='x>y'>|<br>|\n){0,60}") {
        let once = strip_markup(&raw);
        prop_assert_eq!(strip_markup(&once), once.clone());
    }

    #[test]
    fn forged_benchmarks_never_leak(
        n_tools in 1usize..8,
        n_tasks in 1usize..6,
        filler in proptest::collection::vec(token_strategy(), 4..20),
    ) {
        // source corpus vocabulary deliberately reuses the forbidden tokens
        let mut registry = ToolRegistry::new();
        for i in 0..n_tools {
            let brand = if i % 2 == 0 { "gcloud" } else { "gsutil" };
            let tool_id = format!("{brand} {} t{i}", filler[i % filler.len()]);
            registry.register(ToolSpec {
                tool_id: tool_id.clone(),
                name: tool_id.clone(),
                signature: format!("{tool_id} NAME"),
                doc_text: format!(
                    "{tool_id} NAME. gcloud and gsutil docs mention {} often. See gcloud help.",
                    filler.join(" ")
                ),
                demo_pool: vec![DemoExample {
                    instruction: format!("use {tool_id}"),
                    plan: format!("{tool_id} NAME"),
                }],
            }).unwrap();
        }
        let tasks: Vec<BenchTask> = (0..n_tasks).map(|i| BenchTask {
            task_id: format!("t-{i}"),
            question: format!("How to {} with gcloud and gsutil?", filler[i % filler.len()]),
            gold_plan: vec![
                format!("gcloud {} t{} NAME", filler[i % filler.len()], (2 * i) % n_tools.max(1)),
                format!("gsutil cp {} LOC/x", filler[(i + 1) % filler.len()]),
            ],
        }).collect();
        let input = ForgeInput {
            tasks,
            demo_pool: vec![DemoExample {
                instruction: "copy a file with gsutil".into(),
                plan: "gsutil cp a b".into(),
            }],
            source_corpus: "prop".into(),
            creation_seed: 1,
        };
        let map = RenameMap::new(vec![
            ("gcloud".into(), "llmcloud".into()),
            ("gsutil".into(), "llmutil".into()),
        ]).unwrap();
        let forbidden: BTreeSet<String> = ["gcloud".to_string(), "gsutil".to_string()].into_iter().collect();
        let passthrough: BTreeSet<String> = ["llmutil".to_string()].into_iter().collect();

        let out = build_benchmark(&input, &map, &registry, &forbidden, &passthrough).unwrap();
        prop_assert!(scan_artifacts(&out.benchmark, &out.registry, &forbidden).is_empty());
        for task in &out.benchmark.tasks {
            prop_assert!(check_leakage(&task.question, &forbidden).is_empty());
            for line in &task.gold_plan {
                prop_assert!(check_leakage(line, &forbidden).is_empty());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// plan extraction
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn extraction_is_idempotent(raw in "(\\PC|\n|```|- |2\\. |Commands:|\\\\\n){0,40}") {
        let once = extract_plan(&raw);
        let rendered = once.plan.lines.join("\n");
        let twice = extract_plan(&rendered);
        prop_assert_eq!(once.plan.lines, twice.plan.lines);
    }

    #[test]
    fn normalized_plans_have_no_blank_lines(lines in proptest::collection::vec("\\PC{0,30}", 0..8)) {
        for line in normalize_plan(&lines) {
            prop_assert!(!line.trim().is_empty());
            prop_assert!(!line.contains('\n'));
        }
    }
}

// ---------------------------------------------------------------------------
// progdsl round-trips
// ---------------------------------------------------------------------------

fn value_strategy(bound_vars: Vec<String>) -> impl Strategy<Value = Value> {
    let string = "[ -~&&[^'\\\\]]{0,12}".prop_map(Value::Str);
    let quoted = "[ -~]{0,10}".prop_map(Value::Str);
    let number = (any::<i32>(), 0u32..4).prop_map(|(int, frac)| {
        let text = if frac == 0 {
            format!("{int}")
        } else {
            format!("{}.{}", int, 10u32.pow(frac) + frac)
        };
        Value::Num(text.parse().unwrap())
    });
    if bound_vars.is_empty() {
        prop_oneof![string, quoted, number].boxed()
    } else {
        let var = proptest::sample::select(bound_vars).prop_map(Value::Var);
        prop_oneof![string, quoted, number, var].boxed()
    }
}

fn ast_strategy() -> impl Strategy<Value = ProgramAst> {
    let modules = vec!["LOC", "SEG", "TRACK", "REPLACE", "CROP", "EVALX"];
    let keys = vec![
        "image", "object", "box", "mask", "video", "prompt", "k_9", "_hidden",
    ];
    (0usize..8).prop_flat_map(move |n_steps| {
        let mut step_strategies: Vec<BoxedStrategy<Step>> = Vec::new();
        for i in 0..n_steps {
            let bound: Vec<String> = (0..i)
                .map(|j| format!("V{j}"))
                .chain(["IMAGE".to_string(), "VIDEO".to_string()])
                .collect();
            let module = proptest::sample::select(modules.clone());
            let args = proptest::collection::vec(
                (
                    proptest::sample::select(keys.clone()),
                    value_strategy(bound),
                ),
                0..4,
            );
            let step = (module, args).prop_map(move |(module, args)| Step {
                target_var: format!("V{i}"),
                module_name: module.to_string(),
                args: args.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            });
            step_strategies.push(step.boxed());
        }
        step_strategies.prop_map(|steps| ProgramAst { steps })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_render_is_a_fixed_point(ast in ast_strategy()) {
        let source = ast.render();
        let parsed = ProgramAst::parse(&source).unwrap();
        prop_assert_eq!(&parsed, &ast);
        let rendered_again = parsed.render();
        prop_assert_eq!(&rendered_again, &source);
        prop_assert_eq!(ProgramAst::parse(&rendered_again).unwrap(), parsed);
    }
}
