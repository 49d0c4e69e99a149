mod common;

use common::*;
use lossless::discrete::*;
use proptest::prelude::*;

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Nonnegative weights with some exact zeros and a positive total.
fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.01f64..1.0], len)
        .prop_filter("positive total", |w| w.iter().sum::<f64>() > 0.0)
}

fn pair_strategy() -> impl Strategy<Value = (Joint2, DeterministicMap)> {
    (1usize..=4, 1usize..=5, 1usize..=3).prop_flat_map(|(ny, nx, nz)| {
        (weights(ny * nx), prop::collection::vec(0..nz, nx)).prop_map(move |(w, table)| {
            (Joint2::new(ny, nx, normalize(w)).unwrap(), DeterministicMap::new(table, nz).unwrap())
        })
    })
}

fn loss_strategy(k: usize) -> impl Strategy<Value = LossMatrix> {
    prop::collection::vec(0.0f64..3.0, k * k).prop_map(move |c| LossMatrix::new(k, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn kl_matches_oracle_and_is_nonnegative(
        (p, q) in (1usize..6).prop_flat_map(|k| (weights(k), weights(k)))
    ) {
        let (p, q) = (normalize(p), normalize(q));
        let got = kl_divergence(&DiscretePmf::new(p.clone()).unwrap(), &DiscretePmf::new(q.clone()).unwrap()).unwrap();
        let want = kl_oracle(&p, &q);
        if want.is_infinite() {
            prop_assert!(got.is_infinite());
        } else {
            prop_assert!((got - want).abs() < 1e-12);
            prop_assert!(got >= -1e-15);
        }
        let self_kl = kl_divergence(&DiscretePmf::new(p.clone()).unwrap(), &DiscretePmf::new(p).unwrap()).unwrap();
        prop_assert!(self_kl.abs() < 1e-15);
    }

    #[test]
    fn mutual_information_matches_entropies((yx, _) in pair_strategy()) {
        let mi = mutual_information(&yx);
        prop_assert!((mi - mi_oracle(&yx)).abs() < 1e-12);
        prop_assert!(mi >= -1e-15);
        prop_assert!((mi - mutual_information(&yx.transpose())).abs() < 1e-12);
        prop_assert!(mutual_information(&yx.product_of_marginals()).abs() < 1e-12);
    }

    #[test]
    fn cmi_matches_entropies_and_chain_rule((yx, map) in pair_strategy()) {
        let j = apply_map(&yx, &map).unwrap();
        let cmi = conditional_mutual_information(&j);
        prop_assert!((cmi - cmi_oracle(&j)).abs() < 1e-12);
        prop_assert!(cmi >= -1e-15);
        let chain = mutual_information(&j.marginal_yx()) - mutual_information(&j.marginal_yz());
        prop_assert!((cmi - chain).abs() < 1e-12);
    }

    #[test]
    fn bayes_risk_matches_enumeration(
        ((yx, _), loss) in pair_strategy().prop_flat_map(|(yx, m)| {
            let k = yx.rows();
            (Just((yx, m)), loss_strategy(k))
        })
    ) {
        let risk = bayes_risk(&yx, &loss).unwrap();
        prop_assert!((risk - bayes_risk_oracle(&yx, &loss)).abs() < 1e-12);
    }

    #[test]
    fn excess_matches_enumeration_and_is_nonnegative(
        ((yx, map), loss) in pair_strategy().prop_flat_map(|(yx, m)| {
            let k = yx.rows();
            (Just((yx, m)), loss_strategy(k))
        })
    ) {
        let j = apply_map(&yx, &map).unwrap();
        let ex = excess_risk(&j, &map, &loss).unwrap();
        prop_assert!(ex >= 0.0);
        prop_assert!((ex - excess_oracle(&j, &map, &loss)).abs() < 1e-12);
        let id = DeterministicMap::identity(yx.cols()).unwrap();
        let lifted = apply_map(&yx, &id).unwrap();
        prop_assert!(excess_risk(&lifted, &id, &loss).unwrap() < 1e-12);
    }

    #[test]
    fn product_l1_matches_conditional_form((yx, map) in pair_strategy()) {
        let j = apply_map(&yx, &map).unwrap();
        let l = conditional_product_l1(&j);
        prop_assert!((l - product_l1_oracle(&j)).abs() < 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&l));
    }
}

#[test]
fn markov_joints_have_zero_gap() {
    for seed in 0..200 {
        let (j, map) = lossless::synth::gen_markov_joint([3, 5, 2], seed).unwrap();
        assert!(conditional_mutual_information(&j).abs() < 1e-12);
        assert!(conditional_product_l1(&j) < 1e-12);
        let loss = lossless::synth::gen_random_loss(3, 1.0, seed).unwrap();
        assert!(excess_oracle(&j, &map, &loss).abs() < 1e-12);
    }
}

#[test]
fn fair_bit_copy_values() {
    let (j, map) = fair_bit_copy();
    let loss = LossMatrix::zero_one(2).unwrap();
    assert!((excess_risk(&j, &map, &loss).unwrap() - 0.5).abs() < 1e-15);
    assert!((conditional_mutual_information(&j) - std::f64::consts::LN_2).abs() < 1e-15);
    assert!((conditional_product_l1(&j) - 1.0).abs() < 1e-15);
}

#[test]
fn json_roundtrip() {
    let (j, map) = lossless::synth::gen_random_joint([2, 3, 2], 4).unwrap();
    let text = serde_json::to_string(&j).unwrap();
    let back: DiscreteJoint = lossless::io::from_json_str(&text).unwrap();
    assert_eq!(back, j);
    let mtext = serde_json::to_string(&map).unwrap();
    assert!(mtext.starts_with("{\"table\":"));
    let loss: LossMatrix = lossless::io::from_json_str(r#"{"cost":[[0,1],[1,0]]}"#).unwrap();
    assert_eq!(loss, LossMatrix::zero_one(2).unwrap());
}

#[test]
fn json_rejects_unnormalized_joint() {
    let err = lossless::io::from_json_str::<DiscreteJoint>(r#"{"shape":[1,2,1],"probs":[0.5,0.6]}"#).unwrap_err();
    assert!(matches!(err, lossless::Error::Schema { .. }), "{err}");
}
