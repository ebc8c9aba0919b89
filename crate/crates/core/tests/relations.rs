use cloneforge::funtab::{CoeffFun, MixedFun, induced};
use cloneforge::relations::*;
use cloneforge::zmod::PrimePair;
use proptest::prelude::*;
use CongruenceLabel::*;

fn pp23() -> PrimePair {
    PrimePair::new(2, 3).unwrap()
}

fn all_rels() -> Vec<RhoRelation> {
    let mut out = Vec::new();
    for a in CongruenceLabel::ALL {
        for b in CongruenceLabel::ALL {
            for g in CongruenceLabel::ALL {
                out.push(RhoRelation::new(a, b, g));
            }
        }
    }
    out
}

/// Unary preservation straight from the definition: every quadruple in rho
/// is mapped into rho.
fn brute_preserves(f: &MixedFun, rel: RhoRelation) -> bool {
    let (p, q) = (f.pp().p(), f.pp().q());
    let pts: Vec<(u8, u8)> = (0..p).flat_map(|x| (0..q).map(move |y| (x, y))).collect();
    let ap = |v: (u8, u8)| f.eval(&[v.0], &[v.1]);
    for &a in &pts {
        for &b in &pts {
            for &c in &pts {
                for &d in &pts {
                    let m = ((a.0 + p - b.0 + c.0) % p, (a.1 + q - b.1 + c.1) % q);
                    let inside = rel.alpha.relates(a, b) && rel.beta.relates(b, c) && rel.gamma.relates(m, d);
                    if inside && !rel.contains(p, q, ap(a), ap(b), ap(c), ap(d)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[test]
fn malcev_is_x_minus_y_plus_z() {
    assert_eq!(malcev(2, 3, (1, 2), (1, 0), (0, 2)), (0, 1));
    assert_eq!(malcev(3, 2, (0, 0), (2, 1), (0, 0)), (1, 1));
}

#[test]
fn identity_preserves_everything() {
    let id = MixedFun::projection(pp23(), 1, 0).unwrap();
    let id2 = MixedFun::projection(pp23(), 2, 1).unwrap();
    for rel in all_rels() {
        assert!(preserves_rho(&id, rel), "{rel:?}");
        assert!(preserves_rho(&id2, rel), "{rel:?}");
    }
}

#[test]
fn commutator_examples() {
    let pp = pp23();
    let rel = RhoRelation::new(Pi1, Pi1, Zero);
    let f = MixedFun::from_fn(pp, 1, |x, _| (x[0], 0)).unwrap();
    assert!(preserves_rho(&f, rel));
    let g = MixedFun::from_fn(pp, 1, |x, y| (x[0], y[0] * y[0])).unwrap();
    // y^2 at (0, 1, 2) gives 0 - 1 + 1 = 0, while m(0, 1, 2) = 1 maps to 1
    assert!(!preserves_rho(&g, rel));
    assert!(!preserves_rho_literal(&g, rel));
}

#[test]
fn classify_examples() {
    let pp = pp23();
    let f = MixedFun::from_fn(pp, 1, |x, y| (x[0], (x[0] + y[0] * y[0]) % 3)).unwrap();
    assert!(classify(&f).unwrap().preserves_pi1);

    let r = [0u8, 1, 0];
    let g = MixedFun::from_fn(pp, 1, |x, y| ((x[0] + r[y[0] as usize]) % 2, y[0])).unwrap();
    let rep = classify(&g).unwrap();
    assert!(!rep.preserves_pi1);
    assert!(!rep.p_part_ignores_y);
    assert!(rep.preserves_pi2);

    // <b, x> + c on both blocks
    let h = MixedFun::from_fn(pp, 2, |x, y| ((x[0] + 1) % 2, (2 * y[0] + y[1] + 2) % 3)).unwrap();
    let rep = classify(&h).unwrap();
    assert!(rep.affine_in_first && rep.affine_in_second);
    assert!(rep.preserves_pi1 && rep.preserves_pi2);
    assert!(rep.preserves_pi1_pi1_zero && rep.preserves_pi2_pi2_zero);

    // chi_0(y) x is not affine in y
    let chi = induced(pp, &CoeffFun::new(3, 2, 1, vec![1, 0, 0]).unwrap(), &[1], 1).unwrap();
    let rep = classify(&chi).unwrap();
    assert!(!rep.affine_in_second);
    assert!(rep.affine_in_first);
    assert!(rep.p_part_affine_at_y0);
}

#[test]
fn shortcut_matches_literal_on_samples() {
    let pp = pp23();
    let samples = [
        MixedFun::from_fn(pp, 1, |x, y| (x[0] * y[0], y[0] * y[0])).unwrap(),
        MixedFun::from_fn(pp, 1, |x, y| (x[0], (y[0] + x[0]) % 3)).unwrap(),
        MixedFun::from_fn(pp, 1, |_, y| (u8::from(y[0] == 0), 2)).unwrap(),
        MixedFun::constant(pp, 1, (1, 1)).unwrap(),
    ];
    for f in &samples {
        for rel in all_rels() {
            let b = brute_preserves(f, rel);
            assert_eq!(preserves_rho(f, rel), b, "{rel:?} {f:?}");
            assert_eq!(preserves_rho_literal(f, rel), b, "{rel:?} {f:?}");
        }
    }
}

fn unary(pp: PrimePair) -> impl Strategy<Value = MixedFun> {
    let (p, q) = (pp.p(), pp.q());
    let len = (p as usize) * (q as usize);
    prop::collection::vec((0..p, 0..q), len).prop_map(move |t| MixedFun::new(pp, 1, t).unwrap())
}

proptest! {
    #[test]
    fn shortcut_matches_definition(f in unary(pp23()), k in 0usize..64) {
        let rel = all_rels()[k];
        prop_assert_eq!(preserves_rho(&f, rel), brute_preserves(&f, rel));
    }

    #[test]
    fn shortcut_matches_definition_3_2(f in unary(PrimePair::new(3, 2).unwrap()), k in 0usize..64) {
        let rel = all_rels()[k];
        prop_assert_eq!(preserves_rho(&f, rel), brute_preserves(&f, rel));
    }

    #[test]
    fn equivalences_hold_for_unary(f in unary(pp23())) {
        // classify errors if a relational side disagrees with its syntactic side
        let r = classify(&f).unwrap();
        if r.preserves_pi1 {
            prop_assert_eq!(r.preserves_pi1_pi1_zero, r.affine_in_second);
        }
        if r.preserves_pi2 {
            prop_assert_eq!(r.preserves_one_one_pi2, r.q_part_affine_at_x0);
        }
        prop_assert_eq!(r.preserves_pi1, preserves_congruence(&f, Pi1));
    }

    #[test]
    fn equivalences_hold_for_binary(t in prop::collection::vec((0u8..2, 0u8..3), 36)) {
        let f = MixedFun::new(pp23(), 2, t).unwrap();
        prop_assert!(classify(&f).is_ok());
    }
}
