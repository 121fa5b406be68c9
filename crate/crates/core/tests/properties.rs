//! Property tests over the public API: scorer invariants, embedding table
//! invariants and ranking-model invariances.

use proptest::prelude::*;

use semrank::ranking::Candidate;
use semrank::releval::ndcg_of_grades;
use semrank::*;

const DIM: usize = 6;
const VOCAB: usize = 12;
/// Query terms come from `w0..w5`; `w6..w11` never appear in a query.
const QUERY_VOCAB: usize = 6;
const FILLERS: usize = 10;

fn word(i: usize) -> String {
    format!("w{i}")
}

fn nonzero_vectors(n: usize) -> impl Strategy<Value = Vec<Vec<f32>>> {
    prop::collection::vec(
        prop::collection::vec(-1.0f32..1.0, DIM)
            .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f32>() > 1e-3),
        n,
    )
}

fn table(vectors: &[Vec<f32>]) -> EmbeddingTable {
    EmbeddingTable::from_vectors(
        DIM,
        vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (word(i), v.clone())),
    )
    .unwrap()
}

/// The target document is document 0; fillers share no term with any query,
/// so every query term has document frequency at most 1 and positive idf.
fn corpus(target: &[usize]) -> CorpusIndex {
    let text: Vec<String> = target.iter().map(|&i| word(i)).collect();
    let mut docs = vec![Document::new("target", "t", text.join(" "))];
    docs.extend((0..FILLERS).map(|i| Document::new(format!("f{i}"), "t", format!("filler{i}"))));
    build_index(docs, &TokenConfig::without_stopwords()).unwrap()
}

fn query(terms: &[usize]) -> Vec<String> {
    terms.iter().map(|&i| word(i % QUERY_VOCAB)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sem_never_decreases_when_a_term_is_added(
        vectors in nonzero_vectors(VOCAB),
        q in prop::collection::vec(0usize..QUERY_VOCAB, 1..5),
        doc in prop::collection::vec(0usize..VOCAB, 1..15),
        extra in QUERY_VOCAB..VOCAB,
    ) {
        let t = table(&vectors);
        let q = query(&q);
        let before = score_sem(&q, 0, &t, &corpus(&doc), Field::Abstract).unwrap();
        let mut grown = doc.clone();
        grown.push(extra);
        let after = score_sem(&q, 0, &t, &corpus(&grown), Field::Abstract).unwrap();
        prop_assert!(after.score >= before.score - 1e-12, "{} < {}", after.score, before.score);
    }

    #[test]
    fn sem_ignores_document_term_order_and_duplication(
        vectors in nonzero_vectors(VOCAB),
        q in prop::collection::vec(0usize..QUERY_VOCAB, 1..5),
        doc in prop::collection::vec(0usize..VOCAB, 1..15),
        rotate in 0usize..15,
        reverse in any::<bool>(),
        dup in prop::collection::vec(any::<bool>(), 15),
    ) {
        let t = table(&vectors);
        let q = query(&q);
        let mut other = doc.clone();
        let r = rotate % other.len();
        other.rotate_left(r);
        if reverse {
            other.reverse();
        }
        let copies: Vec<usize> = other.iter().zip(&dup).filter(|(_, &d)| d).map(|(&w, _)| w).collect();
        other.extend(copies);
        let a = score_sem(&q, 0, &t, &corpus(&doc), Field::Abstract).unwrap();
        let b = score_sem(&q, 0, &t, &corpus(&other), Field::Abstract).unwrap();
        prop_assert_eq!(a.score.to_bits(), b.score.to_bits());
        prop_assert_eq!(a.matches, b.matches);
    }

    #[test]
    fn scorers_are_pure(
        vectors in nonzero_vectors(VOCAB),
        q in prop::collection::vec(0usize..QUERY_VOCAB, 1..5),
        doc in prop::collection::vec(0usize..VOCAB, 1..15),
    ) {
        let t = table(&vectors);
        let q = query(&q);
        let (i1, i2) = (corpus(&doc), corpus(&doc));
        let p = Bm25Params::default();
        for field in [Field::Title, Field::Abstract, Field::Both] {
            let s1 = score_sem(&q, 0, &t, &i1, field).unwrap();
            let s2 = score_sem(&q, 0, &t, &i2, field).unwrap();
            prop_assert_eq!(s1.score.to_bits(), s2.score.to_bits());
            prop_assert_eq!(
                score_bm25(&q, 0, &i1, p, field).unwrap().to_bits(),
                score_bm25(&q, 0, &i2, p, field).unwrap().to_bits()
            );
        }
        prop_assert_eq!(
            score_tfidf(&q, 0, &i1).unwrap().to_bits(),
            score_tfidf(&q, 0, &i2).unwrap().to_bits()
        );
        prop_assert_eq!(
            score_centroid(&q, 0, &t, &i1, Field::Abstract).unwrap().to_bits(),
            score_centroid(&q, 0, &t, &i2, Field::Abstract).unwrap().to_bits()
        );
    }

    #[test]
    fn loaded_rows_are_unit_and_cosine_symmetric(
        rows in prop::collection::vec(prop::collection::vec(-100.0f32..100.0, DIM), 2..20),
    ) {
        let mut text = format!("{} {DIM}\n", rows.len());
        for (i, r) in rows.iter().enumerate() {
            let cols: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            text.push_str(&format!("{} {}\n", word(i), cols.join(" ")));
        }
        let t = EmbeddingTable::load(text.as_bytes(), EmbeddingFormat::Text).unwrap();
        for w in t.words() {
            let v = t.get(w).unwrap();
            let norm = v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-6, "{w}: norm {norm}");
        }
        for a in t.words() {
            for b in t.words() {
                prop_assert_eq!(t.cosine(a, b).unwrap(), t.cosine(b, a).unwrap());
            }
        }
    }

    #[test]
    fn centroid_of_copies_is_the_vector(vectors in nonzero_vectors(1), k in 1usize..20) {
        let t = table(&vectors);
        let tokens = vec![word(0); k];
        let c = centroid(&t, &tokens).unwrap();
        for (x, &y) in c.iter().zip(t.get("w0").unwrap()) {
            prop_assert!((x - y as f64).abs() < 1e-12);
        }
    }
}

/// Two features over several queries: a noisy copy of the label and noise.
fn ranking_data(seed: u64, queries: usize, per_query: usize) -> Vec<TrainingInstance> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for q in 0..queries {
        for d in 0..per_query {
            let label = rng.gen_range(0..3) as f64;
            out.push(TrainingInstance {
                query_id: format!("q{q}"),
                doc_id: format!("d{d:03}"),
                features: vec![label + rng.gen_range(-0.3..0.3), rng.gen_range(0.0..1.0)],
                label,
            });
        }
    }
    out
}

fn quick(trees: usize) -> LtrHyperparams {
    LtrHyperparams {
        num_trees: trees,
        ..Default::default()
    }
}

fn schema2() -> FeatureSchema {
    FeatureSchema::anonymous(2)
}

fn mean_ndcg(model: &RankingModel, data: &[TrainingInstance], k: usize) -> f64 {
    let mut queries: Vec<&str> = data.iter().map(|d| d.query_id.as_str()).collect();
    queries.sort();
    queries.dedup();
    let total: f64 = queries
        .iter()
        .map(|q| {
            let mut rows: Vec<&TrainingInstance> =
                data.iter().filter(|d| d.query_id == *q).collect();
            rows.sort_by(|a, b| {
                model
                    .score(&b.features)
                    .total_cmp(&model.score(&a.features))
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            });
            let grades: Vec<f64> = rows.iter().map(|d| d.label).collect();
            ndcg_of_grades(&grades, k)
        })
        .sum();
    total / queries.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn model_ignores_instance_order(seed in any::<u64>(), rotate in 0usize..60) {
        let data = ranking_data(seed, 6, 10);
        let mut shuffled = data.clone();
        shuffled.reverse();
        shuffled.rotate_left(rotate);
        let a = train_lambdamart(&schema2(), &data, &quick(20)).unwrap();
        let b = train_lambdamart(&schema2(), &shuffled, &quick(20)).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    /// Relabeling that keeps the doc ids' relative order resolves every score
    /// tie the same way, so the model is unchanged.
    #[test]
    fn model_ignores_order_preserving_doc_relabeling(seed in any::<u64>()) {
        let data = ranking_data(seed, 6, 10);
        let relabeled: Vec<TrainingInstance> = data
            .iter()
            .map(|d| TrainingInstance {
                doc_id: format!("PMID-{}", d.doc_id),
                ..d.clone()
            })
            .collect();
        let a = train_lambdamart(&schema2(), &data, &quick(20)).unwrap();
        let b = train_lambdamart(&schema2(), &relabeled, &quick(20)).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn saved_model_predicts_bit_identically(
        seed in any::<u64>(),
        xs in prop::collection::vec((-5.0f64..5.0, -1.0f64..2.0), 1000),
    ) {
        let model = train_lambdamart(&schema2(), &ranking_data(seed, 5, 12), &quick(30)).unwrap();
        let mut bytes = Vec::new();
        model.save(&mut bytes).unwrap();
        let loaded = RankingModel::load(bytes.as_slice()).unwrap();
        for (x0, x1) in xs {
            let fv = FeatureVector::new(schema2(), vec![x0, x1]).unwrap();
            prop_assert_eq!(predict(&model, &fv).unwrap().to_bits(), predict(&loaded, &fv).unwrap().to_bits());
        }
    }
}

#[test]
fn boosting_does_not_regress_on_separable_data() {
    let data = ranking_data(11, 20, 15);
    let model = train_lambdamart(&schema2(), &data, &quick(300)).unwrap();
    let mut last = mean_ndcg(&model.prefix(0), &data, 10);
    for t in (50..=300).step_by(50) {
        let now = mean_ndcg(&model.prefix(t), &data, 10);
        assert!(
            now >= last - 0.02,
            "NDCG@10 fell from {last} to {now} at {t} trees"
        );
        last = now;
    }
    assert!(last >= 0.95, "final training NDCG@10 {last}");
}

#[test]
fn single_ordering_feature_is_reproduced_by_rerank() {
    // ids sort opposite to the feature, so doc-id tie breaking cannot help
    let schema = FeatureSchema::anonymous(1);
    let mut data = Vec::new();
    for q in 0..8 {
        for level in 0..5 {
            data.push(TrainingInstance {
                query_id: format!("q{q}"),
                doc_id: format!("d{}", 9 - level),
                features: vec![level as f64],
                label: level as f64,
            });
        }
    }
    let model = train_lambdamart(&schema, &data, &quick(100)).unwrap();
    let candidates: Vec<Candidate> = (0..5)
        .map(|level| Candidate {
            doc_id: format!("d{}", 9 - level),
            features: FeatureVector::new(schema.clone(), vec![level as f64]).unwrap(),
        })
        .collect();
    let ranked: Vec<String> = rerank(&model, &candidates)
        .unwrap()
        .into_iter()
        .map(|s| s.doc_id)
        .collect();
    assert_eq!(ranked, ["d5", "d6", "d7", "d8", "d9"]);
}
