//! Cartan calculus, Berezin integration, Hodge star and Frölicher–Nijenhuis brackets.

use proptest::prelude::*;
use superforms::{
    berezin_integral, de_rham, euler, fn_bracket, hodge_star, lift_inner, lift_lie, tensor_field,
    Chart, Expr, Metric, Parity, Sampler, Scalar, Symbol, Tensor1k,
};

fn gens(c: &Chart) -> Vec<u16> {
    (0..c.n_generators() as u16).collect()
}

fn sign(b: bool) -> i64 {
    if b {
        -1
    } else {
        1
    }
}

fn euclid(m: usize) -> Chart {
    let xs: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    Chart::new(&xs, &[] as &[String], &[] as &[String]).unwrap()
}

/// Random vector-valued `k`-form with polynomial coefficients.
fn random_tensor(smp: &mut Sampler, base: &Chart, k: u32) -> Tensor1k {
    let pit = base.pit().unwrap();
    let m = base.n_generators();
    let fibers: Vec<u16> = (0..m as u16).map(|i| pit.fiber_of(i).unwrap()).collect();
    let xs: Vec<u16> = (0..m as u16).collect();
    let comps = (0..m)
        .map(|_| {
            let mut e = Expr::zero(&pit);
            if fibers.len() < k as usize {
                return e;
            }
            for _ in 0..smp.range(1, 2) {
                let mut t = smp.monomial(&pit, &xs, Parity::Even, 2);
                let mut fs = fibers.clone();
                while fs.len() > k as usize {
                    fs.remove(smp.range(0, fs.len() - 1));
                }
                for f in fs {
                    t = &t * &Expr::generator(&pit, f);
                }
                e = &e + &t;
            }
            e
        })
        .collect();
    Tensor1k::new(base, k, comps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cartan_formula_and_table(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let c = smp.chart(3, 3);
        let pit = c.pit().unwrap();
        let (q, e) = (de_rham(&pit).unwrap(), euler(&pit).unwrap());
        prop_assert!(q.commutator(&q).unwrap().is_zero());
        prop_assert!(e.commutator(&e).unwrap().is_zero());
        prop_assert_eq!(e.commutator(&q).unwrap(), q.clone());
        let (pv, pw) = (smp.parity(), smp.parity());
        let v = smp.vfield(&c, pv, 2, 2).unwrap();
        let w = smp.vfield(&c, pw, 2, 2).unwrap();
        let (vu, vd) = (lift_lie(&v).unwrap(), lift_inner(&v).unwrap());
        let (wu, wd) = (lift_lie(&w).unwrap(), lift_inner(&w).unwrap());
        let vw = v.commutator(&w).unwrap();
        prop_assert_eq!(vd.commutator(&q).unwrap(), vu.clone());
        prop_assert!(e.commutator(&vu).unwrap().is_zero());
        prop_assert_eq!(e.commutator(&vd).unwrap(), vd.neg());
        prop_assert!(vu.commutator(&q).unwrap().is_zero());
        prop_assert_eq!(vu.commutator(&wu).unwrap(), lift_lie(&vw).unwrap());
        prop_assert!(vd.commutator(&wd).unwrap().is_zero());
        prop_assert_eq!(vu.commutator(&wd).unwrap(), lift_inner(&vw).unwrap());
    }

    #[test]
    fn vector_fields_are_graded_derivations(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let c = smp.chart(3, 3);
        let pv = smp.parity();
        let v = smp.vfield(&c, pv, 2, 2).unwrap();
        let (pf, pg) = (smp.parity(), smp.parity());
        let f = smp.homogeneous(&c, &gens(&c), pf, 3, 3);
        let g = smp.homogeneous(&c, &gens(&c), pg, 3, 3);
        let lhs = v.apply(&(&f * &g)).unwrap();
        let rhs = &(&v.apply(&f).unwrap() * &g) + &(&(&f * &v.apply(&g).unwrap()) * sign(pv.is_odd() && pf.is_odd()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn berezin_integral_is_linear(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let c = Chart::new(&["x"], &["th1", "th2", "th3"], &["a"]).unwrap();
        let (f, g) = (smp.nonzero(&c, Parity::Even, 4, 4), smp.nonzero(&c, Parity::Odd, 4, 4));
        let k = &c.var("a").unwrap() + &Expr::constant(&c, smp.gaussian());
        let odd = [1u16, 2, 3];
        let n = smp.range(1, 3);
        let lhs = berezin_integral(&(&f + &(&k * &g)), &odd[..n]).unwrap();
        let rhs = &berezin_integral(&f, &odd[..n]).unwrap() + &(&k * &berezin_integral(&g, &odd[..n]).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn hodge_star_is_linear(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let m = smp.range(1, 4);
        let base = euclid(m);
        let pit = base.pit().unwrap();
        let metric = Metric::diagonal(&base, &vec![1; m]).unwrap();
        let f = smp.nonzero(&pit, Parity::Even, 3, 3);
        let g = smp.nonzero(&pit, Parity::Even, 3, 3);
        let k = Expr::constant(&pit, smp.gaussian());
        let lhs = hodge_star(&(&f + &(&k * &g)), &metric).unwrap();
        let rhs = &hodge_star(&f, &metric).unwrap() + &(&k * &hodge_star(&g, &metric).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn hodge_star_commutes_with_rotations(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let base = euclid(2);
        let pit = base.pit().unwrap();
        let metric = Metric::diagonal(&base, &[1, 1]).unwrap();
        let p = smp.parity();
        let f = smp.homogeneous(&pit, &gens(&pit), p, 3, 4);
        let r = |a: i64, b: i64, i: u16, j: u16| {
            &(&Expr::generator(&pit, i) * &Expr::ratio(&pit, a, 5)) + &(&Expr::generator(&pit, j) * &Expr::ratio(&pit, b, 5))
        };
        let (d1, d2) = (pit.fiber_of(0).unwrap(), pit.fiber_of(1).unwrap());
        let rot = vec![
            (Symbol::Gen(0), r(3, -4, 0, 1)),
            (Symbol::Gen(1), r(4, 3, 0, 1)),
            (Symbol::Gen(d1), r(3, -4, d1, d2)),
            (Symbol::Gen(d2), r(4, 3, d1, d2)),
        ];
        let lhs = hodge_star(&f.substitute(&rot).unwrap(), &metric).unwrap();
        let rhs = hodge_star(&f, &metric).unwrap().substitute(&rot).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn fn_bracket_structure(seed in any::<u64>()) {
        let mut smp = Sampler::new(seed);
        let m = smp.range(1, 3);
        let base = euclid(m);
        let pit = base.pit().unwrap();
        let (k, l) = (smp.range(0, 2) as u32, smp.range(0, 2) as u32);
        let (a, b) = (random_tensor(&mut smp, &base, k), random_tensor(&mut smp, &base, l));
        let ab = fn_bracket(&a, &b).unwrap();
        let ba = fn_bracket(&b, &a).unwrap();
        prop_assert_eq!(ab.degree(), k + l);
        for (x, y) in ab.components().iter().zip(ba.components()) {
            prop_assert_eq!(x, &(y * -sign(k * l % 2 == 1)));
        }
        let (va, vb) = (tensor_field(&a).unwrap(), tensor_field(&b).unwrap());
        let q = de_rham(&pit).unwrap();
        prop_assert!(va.commutator(&vb).unwrap().commutator(&q).unwrap().is_zero());
        let e = euler(&pit).unwrap();
        let scaled = va.mul_left(&Expr::int(&pit, k as i64)).unwrap();
        prop_assert_eq!(e.commutator(&va).unwrap(), scaled);
    }
}

#[test]
fn hodge_star_on_the_line() {
    let base = euclid(1);
    let pit = base.pit().unwrap();
    let metric = Metric::diagonal(&base, &[1]).unwrap();
    let dx = Expr::generator(&pit, pit.fiber_of(0).unwrap());
    assert_eq!(hodge_star(&dx, &metric).unwrap(), Expr::one(&pit));
    let one = hodge_star(&Expr::one(&pit), &metric).unwrap();
    assert_eq!(one, &dx * &Expr::constant(&pit, Scalar::i()));
}

#[test]
fn non_integrable_structure_on_the_plane() {
    // A¹ = x²ψ², A² = −ψ¹: the only torsion component is N¹₁₂ = J²₁ ∂₂J¹₂ = −2x².
    let base = Chart::new(&["x1", "x2"], &[] as &[&str], &[] as &[&str]).unwrap();
    let pit = base.pit().unwrap();
    let x2 = pit.var("x2").unwrap();
    let (p1, p2) = (pit.var("dx1").unwrap(), pit.var("dx2").unwrap());
    let j = Tensor1k::new(&base, 1, vec![&x2.pow(2) * &p2, -p1.clone()]).unwrap();
    let b = fn_bracket(&j, &j).unwrap();
    let torsion = &(&x2 * -2) * &(&p1 * &p2);
    assert_eq!(b.components()[0], &torsion * 2);
    assert!(b.components()[1].is_zero());
}
