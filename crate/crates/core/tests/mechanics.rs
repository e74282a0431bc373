//! Graded Poisson brackets, superflows and the star products.

use proptest::prelude::*;
use superforms::symplectic::flow_with;
use superforms::{
    clifford_rep, hamilton_residual, hamiltonian_vf, moyal_star, odd_star, poisson, quantum_params,
    quantum_susy_check, r11_compose, star_bracket, susy_chart, susy_model, Bracket, Branch, Chart,
    Expr, Matrix, Parity, Sampler, StarAlgebra, Symbol, SympStructure, Var,
};

fn sign(b: bool) -> i64 {
    if b {
        -1
    } else {
        1
    }
}

fn structure(i: usize) -> SympStructure {
    let sigs: [&[i64]; 6] = [&[], &[1], &[-1], &[1, 1], &[1, -1], &[-1, -1]];
    match i % 14 {
        12 => SympStructure::canonical_odd(1).unwrap(),
        13 => SympStructure::canonical_odd(2).unwrap(),
        k => {
            let sig = sigs[k % 6];
            SympStructure::canonical_even(1 + k / 6, sig.len(), sig).unwrap()
        }
    }
}

fn phase_chart(m: usize, n: usize) -> Chart {
    let xs: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    let ps: Vec<String> = (1..=m).map(|i| format!("p{i}")).collect();
    let xis: Vec<String> = (1..=n).map(|i| format!("xi{i}")).collect();
    quantum_params(Chart::builder().even(&xs).even(&ps).odd(&xis))
        .build()
        .unwrap()
}

fn hbar_var(c: &Chart) -> Var {
    match c.lookup("hbar") {
        Some(Symbol::Param(p)) => Var::Param(p),
        _ => unreachable!(),
    }
}

/// First-order bidifferential `∂_p f ∂_x h − ∂_x f ∂_p h + g (f ∂⃖_ξ)(∂⃗_ξ h)`.
fn first_order(f: &Expr, fp: Parity, h: &Expr, a: &StarAlgebra, sig: &[i64]) -> Expr {
    let (xs, ps, xis) = a.layout();
    let mut out = Expr::zero(a.chart());
    for (&x, &p) in xs.iter().zip(ps) {
        out = &out + &(&f.left_deriv(p) * &h.left_deriv(x));
        out = &out - &(&f.left_deriv(x) * &h.left_deriv(p));
    }
    for (&xi, g) in xis.iter().zip(sig) {
        let right = &f.left_deriv(xi) * sign(!fp.is_odd());
        out = &out + &(&(&right * &h.left_deriv(xi)) * *g);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poisson_bracket_axioms(seed in any::<u64>(), which in 0usize..14) {
        let mut smp = Sampler::new(seed);
        let s = structure(which);
        let c = s.base().clone();
        let om = s.kind().bit();
        let (pf, pg, ph) = (smp.parity(), smp.parity(), smp.parity());
        let f = smp.nonzero(&c, pf, 3, 3);
        let g = smp.nonzero(&c, pg, 3, 3);
        let h = smp.nonzero(&c, ph, 3, 3);
        let h2 = smp.nonzero(&c, pg, 3, 3);
        let (fb, gb, hb) = (pf.bit(), pg.bit(), ph.bit());
        let br = |a: &Expr, b: &Expr| poisson(a, b, &s).unwrap();
        let fg = br(&f, &g);
        prop_assert!(fg.is_zero() || fg.parity() == Some(Parity::from_bit(fb + gb + om)));
        prop_assert_eq!(br(&f, &(&g + &h2)), &fg + &br(&f, &h2));
        prop_assert_eq!(&fg, &(&br(&g, &f) * -sign((fb + om) * (gb + om) % 2 == 1)));
        let leibniz = &(&fg * &h) + &(&(&g * &br(&f, &h)) * sign((fb + om) * gb % 2 == 1));
        prop_assert_eq!(br(&f, &(&g * &h)), leibniz);
        let cyc = |a: &Expr, b: &Expr, d: &Expr, pa: u32, pd: u32| &br(a, &br(b, d)) * sign((pa + om) * (pd + om) % 2 == 1);
        let jac = &(&cyc(&f, &g, &h, fb, hb) + &cyc(&g, &h, &f, gb, fb)) + &cyc(&h, &f, &g, hb, gb);
        prop_assert!(jac.is_zero(), "Jacobi residual {}", jac);
        if !fg.is_zero() {
            let comm = hamiltonian_vf(&f, &s).unwrap().commutator(&hamiltonian_vf(&g, &s).unwrap()).unwrap();
            let want = comm.mul_left(&Expr::int(&c, sign(om == 0))).unwrap();
            prop_assert_eq!(hamiltonian_vf(&fg, &s).unwrap(), want);
        }
    }

    #[test]
    fn hamilton_equations_hold(seed in any::<u64>(), which in 0usize..14) {
        let mut smp = Sampler::new(seed);
        let s = structure(which);
        let (ph, pf) = (smp.parity(), smp.parity());
        let h = smp.nonzero(s.base(), ph, 3, 3);
        let f = smp.nonzero(s.base(), pf, 2, 2);
        prop_assume!(!h.is_zero() && !f.is_zero());
        prop_assert!(hamilton_residual(&f, &h, &s).unwrap().residual().unwrap().is_zero());
    }

    #[test]
    fn moyal_product_is_associative(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let (m, n) = (smp.range(1, 2), smp.range(0, 2));
        let c = phase_chart(m, n);
        let sig: Vec<i64> = (0..n).map(|_| if smp.coin() { 1 } else { -1 }).collect();
        let a = StarAlgebra::diagonal(&c, &sig).unwrap();
        let gens: Vec<u16> = (0..c.n_generators() as u16).collect();
        let mut pick = || { let p = smp.parity(); smp.homogeneous(&c, &gens, p, 3, 3) };
        let (f, g, h) = (pick(), pick(), pick());
        let st = |x: &Expr, y: &Expr| moyal_star(x, y, &a).unwrap();
        prop_assert_eq!(st(&st(&f, &g), &h), st(&f, &st(&g, &h)));
    }

    #[test]
    fn star_product_first_order_and_classical_limit(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let (m, n) = (smp.range(1, 2), smp.range(0, 2));
        let c = phase_chart(m, n);
        let sig: Vec<i64> = (0..n).map(|_| if smp.coin() { 1 } else { -1 }).collect();
        let a = StarAlgebra::diagonal(&c, &sig).unwrap();
        let gens: Vec<u16> = (0..c.n_generators() as u16).collect();
        let (pf, ph) = (smp.parity(), smp.parity());
        let f = smp.homogeneous(&c, &gens, pf, 3, 3);
        let h = smp.homogeneous(&c, &gens, ph, 3, 3);
        let hb = hbar_var(&c);
        let ih = &Expr::i(&c) * &a.hbar();
        let rest = &(&moyal_star(&f, &h, &a).unwrap() - &(&f * &h)) - &(&(&ih / 2) * &first_order(&f, pf, &h, &a, &sig));
        prop_assert!(rest.coeff_of(&hb, 0).is_zero());
        prop_assert!(rest.coeff_of(&hb, 1).is_zero(), "first order residual {}", rest);

        let fe = smp.homogeneous(&c, &gens, Parity::Even, 3, 3);
        let s = SympStructure::canonical_even_on(&c.base_chart(), &sig).unwrap();
        let limit = star_bracket(&fe, &h, &a, Bracket::Commutator).unwrap().divide(&ih).unwrap().coeff_of(&hb, 0);
        prop_assert_eq!(limit, poisson(&fe, &h, &s).unwrap());
    }

    #[test]
    fn odd_star_is_associative_and_graded_commutative(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let s = SympStructure::canonical_odd(smp.range(1, 2)).unwrap();
        let kc = s.base().with_generators(&[("kappa", Parity::Odd)]).unwrap();
        let kappa = kc.gen_index("kappa").unwrap();
        let base: Vec<u16> = (0..s.base().n_generators() as u16).collect();
        let (pf, pg, ph) = (smp.parity(), smp.parity(), smp.parity());
        let f = smp.homogeneous(&kc, &base, pf, 3, 3);
        let g = smp.homogeneous(&kc, &base, pg, 3, 3);
        let h = smp.homogeneous(&kc, &base, ph, 3, 3);
        let st = |x: &Expr, y: &Expr| odd_star(x, y, kappa, &s).unwrap();
        prop_assert_eq!(st(&st(&f, &g), &h), st(&f, &st(&g, &h)));
        prop_assert_eq!(st(&f, &g), &st(&g, &f) * sign(pf.is_odd() && pg.is_odd()));
    }
}

#[test]
fn clifford_relations_for_every_signature() {
    for n in 2..=4usize {
        let c = phase_chart(1, n);
        let ih = &Expr::i(&c) * &c.var("hbar").unwrap();
        for bits in 0..1u32 << n {
            let sig: Vec<i64> = (0..n)
                .map(|k| if bits >> k & 1 == 1 { -1 } else { 1 })
                .collect();
            let reps = clifford_rep(&c, &sig).unwrap();
            let d = reps[0].rows();
            for a in 0..n {
                for b in 0..n {
                    let ac = reps[a]
                        .try_mul(&reps[b])
                        .unwrap()
                        .try_add(&reps[b].try_mul(&reps[a]).unwrap())
                        .unwrap();
                    let k = if a == b { &ih * sig[a] } else { Expr::zero(&c) };
                    assert_eq!(
                        ac,
                        Matrix::identity(&c, d).scale_left(&k).unwrap(),
                        "n = {n}, g = {sig:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn superflow_of_the_supercharge_composes() {
    let chart = susy_chart().unwrap();
    let model = susy_model(&chart, Branch::Plus).unwrap();
    let s = &model.structure;
    let c = chart
        .with_generators(&[("eps", Parity::Odd), ("eps2", Parity::Odd)])
        .unwrap()
        .with_params(&["t", "t2"])
        .unwrap();
    let par = |n: &str| match c.lookup(n) {
        Some(Symbol::Param(p)) => Var::Param(p),
        _ => unreachable!(),
    };
    let tv = [par("t"), par("t2")];
    let v = |n: &str| c.var(n).unwrap();
    let h = model.q1.embed(&c).unwrap();
    // Even structure: the nested pull-back composes in reverse order.
    let (tc, ec) = r11_compose((&v("t2"), &v("eps2")), (&v("t"), &v("eps"))).unwrap();
    for obs in ["x", "p", "xi1", "xi2"] {
        let f = v(obs);
        let inner = flow_with(&f, &h, s, &v("t2"), &v("eps2"), 3, &tv).unwrap();
        let nested = flow_with(&inner, &h, s, &v("t"), &v("eps"), 3, &tv).unwrap();
        let direct = flow_with(&f, &h, s, &tc, &ec, 3, &tv).unwrap();
        assert_eq!(nested, direct, "{obs}");
    }
}

#[test]
fn quantum_supersymmetry_with_formal_potential() {
    let chart = susy_chart().unwrap();
    for branch in [Branch::Plus, Branch::Minus] {
        let m = susy_model(&chart, branch).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                assert!(
                    quantum_susy_check(&m, i, j).unwrap().passed(),
                    "{branch:?} {i} {j}"
                );
            }
        }
    }
}
