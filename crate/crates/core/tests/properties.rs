use proptest::prelude::*;

use warpcheck::geometry::MetricPatch;
use warpcheck::maps::{SectionAlongMap, SmoothMap};
use warpcheck::{parse, Jet};

const ORDER: usize = 3;
// monomials in two variables up to total degree 3
const COEFFS: usize = 10;

fn jet_strategy() -> impl Strategy<Value = Jet> {
    prop::collection::vec(-2.0..2.0f64, COEFFS).prop_map(|c| Jet::from_coeffs(2, ORDER, c).unwrap())
}

fn positive_jet() -> impl Strategy<Value = Jet> {
    (0.5..3.0f64, prop::collection::vec(-1.0..1.0f64, COEFFS - 1)).prop_map(|(v, rest)| {
        let mut c = vec![v];
        c.extend(rest);
        Jet::from_coeffs(2, ORDER, c).unwrap()
    })
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

fn expr_strategy() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (0.1..5.0f64).prop_map(|c| format!("{c:.4}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})+({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}-{b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}/(2+({b})^2)")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})^2")),
            inner.clone().prop_map(|a| format!("exp(0.1*{a})")),
            inner.clone().prop_map(|a| format!("log(1+({a})^2)")),
            inner.prop_map(|a| format!("sqrt(1+({a})^2)")),
        ]
    })
}

fn metric_strategy() -> impl Strategy<Value = MetricPatch> {
    prop::collection::vec(-0.3..0.3f64, 9).prop_map(|c| {
        let g = [
            vec![
                format!("1.5+{}*y^2+{}*z", c[0], c[1]),
                format!("{}*x*y", c[2]),
                format!("{}*z", c[3]),
            ],
            vec![
                format!("{}*x*y", c[2]),
                format!("1.4+{}*sin(x)+{}*z^2", c[4], c[5]),
                "0".into(),
            ],
            vec![
                format!("{}*z", c[3]),
                "0".into(),
                format!("1.6+{}*x*y+{}*exp(y)", c[6], c[7] * c[8]),
            ],
        ];
        MetricPatch::from_strings(
            "M",
            &["x".to_string(), "y".into(), "z".into()],
            vec![(-1.0, 1.0); 3],
            &g,
        )
        .unwrap()
    })
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.9..0.9f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_ring_identities(a in jet_strategy(), b in jet_strategy(), c in jet_strategy()) {
        prop_assert!(close(&(&a * &b), &(&b * &a), 1e-12));
        prop_assert!(close(&(&(&a + &b) * &c), &(&(&a * &c) + &(&b * &c)), 1e-10));
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-10));
        prop_assert!(close(&(&(&a - &b) + &b), &a, 1e-12));
    }

    #[test]
    fn jet_inverse_functions(a in jet_strategy(), p in positive_jet()) {
        prop_assert!(close(&p.ln().unwrap().exp(), &p, 1e-10));
        prop_assert!(close(&(&(&a / &p).unwrap() * &p), &a, 1e-9));
        let s = p.sqrt().unwrap();
        prop_assert!(close(&(&s * &s), &p, 1e-10));
        prop_assert!(close(&p.powi(3).unwrap(), &p.powf(3.0).unwrap(), 1e-9));
        let trig = &(&a.sin() * &a.sin()) + &(&a.cos() * &a.cos());
        prop_assert!(close(&trig, &Jet::constant(2, ORDER, 1.0), 1e-11));
    }

    #[test]
    fn composition_follows_the_chain_rule(a in jet_strategy(), b in jet_strategy(), c in jet_strategy()) {
        let coords = Jet::coordinates(&[b.value(), c.value()], ORDER).unwrap();
        prop_assert!(close(&a.compose(&coords), &a, 1e-12));
        let f = a.compose(&[b.clone(), c.clone()]);
        for v in 0..2 {
            let chain = a.d(0) * b.d(v) + a.d(1) * c.d(v);
            prop_assert!((f.d(v) - chain).abs() <= 1e-10 * chain.abs().max(1.0));
        }
        prop_assert!((f.value() - a.value()).abs() < 1e-14);
    }

    #[test]
    fn print_then_parse_is_stable(src in expr_strategy(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let e = parse(&src, &["x", "y"]).unwrap();
        let printed = e.to_string();
        let again = parse(&printed, &["x", "y"]).unwrap();
        prop_assert_eq!(&printed, &again.to_string());
        let (u, v) = (e.eval(&[x, y]).unwrap(), again.eval(&[x, y]).unwrap());
        prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "{} -> {}: {} vs {}", src, printed, u, v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_bianchi_and_symmetries(m in metric_strategy(), p in point3()) {
        let geo = m.local(&p, 2).unwrap();
        let r = |l, k, i, j| geo.riemann(l, k, i, j).unwrap().value();
        let g = geo.metric_values();
        let lower = |a: usize, k, i, j| (0..3).map(|l| g[a * 3 + l] * r(l, k, i, j)).sum::<f64>();
        for l in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let cyclic = r(l, k, i, j) + r(l, i, j, k) + r(l, j, k, i);
                        prop_assert!(cyclic.abs() < 1e-10, "Bianchi {l}{k}{i}{j}: {cyclic}");
                        prop_assert!((r(l, k, i, j) + r(l, k, j, i)).abs() < 1e-10);
                        prop_assert!((lower(l, k, i, j) - lower(i, j, l, k)).abs() < 1e-10);
                        prop_assert!((lower(l, k, i, j) + lower(k, l, i, j)).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn connection_is_metric_compatible(m in metric_strategy(), p in point3()) {
        let geo = m.local(&p, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let lhs = geo.g(i, j).d(k);
                    let rhs: f64 = (0..3)
                        .map(|l| {
                            geo.gamma(l, k, i).value() * geo.g(l, j).value()
                                + geo.gamma(l, k, j).value() * geo.g(i, l).value()
                        })
                        .sum();
                    prop_assert!((lhs - rhs).abs() < 1e-11);
                    let torsion = geo.gamma(k, i, j).value() - geo.gamma(k, j, i).value();
                    prop_assert!(torsion.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn jacobi_operator_is_linear(
        m in metric_strategy(),
        p in point3(),
        s in -2.0..2.0f64,
        t in -2.0..2.0f64,
        c in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        let target = MetricPatch::from_strings("N", &["u", "v"], vec![(-5.0, 5.0); 2], &[vec!["1+u^2", "0.2*u*v"], vec!["0.2*u*v", "2+cos(v)"]]).unwrap();
        let map = SmoothMap::from_strings(m, target, &["x+y*z", "sin(x)+z^2"]).unwrap();
        let v = SectionAlongMap::from_strings(&map, &[format!("{}*x*y+1", c[0]), format!("cos({}*z)", c[1])]).unwrap();
        let w = SectionAlongMap::from_strings(&map, &[format!("exp({}*y)", c[2]), format!("{}*x^2-z", c[3])]).unwrap();
        let pb = map.pullback(&p, 4).unwrap();
        let vj = v.jets(&p, 4).unwrap();
        let wj = w.jets(&p, 4).unwrap();
        let combo: Vec<Jet> = vj.iter().zip(&wj).map(|(a, b)| &a.scale(s) + &b.scale(t)).collect();
        let lhs = pb.jacobi(&combo).unwrap();
        let jv = pb.jacobi(&vj).unwrap();
        let jw = pb.jacobi(&wj).unwrap();
        for a in 0..2 {
            let rhs = s * jv[a].value() + t * jw[a].value();
            prop_assert!((lhs[a].value() - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
    }
}
