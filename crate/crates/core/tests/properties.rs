use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mdkit::finite::{
    join_systems, map_to_curly_y, random_aperiodic_system, random_system, time_division, zero_slice_conjugacy,
    SystemJoin,
};
use mdkit::meandim::{cover_d, cover_join, cover_ord, mdim_combine, Cover, MdimBound, MdimRule, OpenLattice, COVER_D_CAP};
use mdkit::shift::{power_map, shift, SeqPoint};
use mdkit::torus::{rho, TorusElem};
use mdkit::tower::{run_section_suite, SectionSuiteConfig};
use mdkit::{Rational, Rational64, Scalar, System};

fn torus() -> impl Strategy<Value = TorusElem<Rational>> {
    (-500i64..500, 1i64..60).prop_map(|(a, b)| TorusElem::from_ratio(a, b))
}

fn periodic(max_len: usize) -> impl Strategy<Value = SeqPoint<Rational>> {
    prop::collection::vec((0i64..16).prop_map(|a| Rational::ratio(a, 8)), 1..max_len)
        .prop_map(|v| SeqPoint::periodic_scalars(v).unwrap())
}

fn system(max_points: usize) -> impl Strategy<Value = System> {
    any::<u64>().prop_map(move |seed| random_system(&mut ChaCha8Rng::seed_from_u64(seed), max_points))
}

proptest! {
    #[test]
    fn rho_is_a_metric(x in torus(), y in torus(), z in torus()) {
        let zero = Rational::from_int(0);
        let one = Rational::from_int(1);
        prop_assert_eq!(rho(&x, &x), zero.clone());
        prop_assert_eq!(rho(&x, &y), rho(&y, &x));
        prop_assert!(rho(&x, &y) >= zero && rho(&x, &y) <= one);
        prop_assert!(rho(&x, &z) <= rho(&x, &y) + rho(&y, &z));
        prop_assert_eq!(rho(&x, &y) == zero, x == y);
    }

    #[test]
    fn rho_is_translation_invariant(x in torus(), y in torus(), t in torus()) {
        prop_assert_eq!(rho(&(&x + &t), &(&y + &t)), rho(&x, &y));
    }

    #[test]
    fn shifts_compose(x in periodic(9), a in -20i64..20, b in -20i64..20) {
        prop_assert_eq!(shift(&shift(&x, a), b), shift(&x, a + b));
        let p = x.period().unwrap() as i64;
        prop_assert_eq!(shift(&x, a + p), shift(&x, a));
    }

    #[test]
    fn power_map_intertwines_shift(x in periodic(13), j in 1i64..12) {
        let lhs = shift(&power_map(j, &x).unwrap(), 1);
        let rhs = power_map(j, &shift(&x, j)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn power_maps_multiply(x in periodic(13), i in 1i64..12, j in 1i64..12) {
        let lhs = power_map(i, &power_map(j, &x).unwrap()).unwrap();
        prop_assert_eq!(lhs, power_map(i * j, &x).unwrap());
    }

    #[test]
    fn time_division_composes(sys in system(8), a in 1usize..4, b in 1usize..4) {
        let ab = time_division(&time_division(&sys, a).unwrap(), b).unwrap();
        prop_assert!(ab.is_conjugate(&time_division(&sys, a * b).unwrap()));
        let d = time_division(&sys, a).unwrap();
        prop_assert!(zero_slice_conjugacy(&sys, &d, a));
        let mut expected: Vec<usize> = sys.cycle_type().iter().map(|l| l * a).collect();
        expected.sort_unstable();
        prop_assert_eq!(d.cycle_type(), expected);
    }

    #[test]
    fn join_periodic_points_are_join_of_periodic_points(x in system(5), y in system(5), n in 1usize..=12) {
        let joined = join_systems(&x, &y);
        prop_assert_eq!(joined.periodic_subjoin(n), SystemJoin::join_of_periodic(&x, &y, n).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn aperiodic_systems_map_into_curly_y(seed in any::<u64>()) {
        let sys: System = random_aperiodic_system(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let out = map_to_curly_y(&sys, 2).unwrap();
        prop_assert!(out.suite.passed(), "{:?}", out.suite);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn section_is_a_right_inverse(m in 2usize..=4, dim in 1usize..=2, offset in 0i64..200, seed in any::<u64>()) {
        let big = [0, 1, 2, 6, 24][m];
        let small = [0, 1, 1, 2, 6][m];
        let lo = small + 1 - 2 * big;
        let cfg = SectionSuiteConfig {
            m,
            dim,
            delta: Rational64::ratio(1, 2),
            start: lo + offset % (-lo),
            len: 3 * big as usize,
            samples: 1,
            seed,
            denom: 32,
            random_anchors: true,
        };
        let out = run_section_suite(&cfg).unwrap();
        prop_assert!(out.suite.passed(), "{:?}", out.suite);
    }
}

fn lattice_cover(lattice: &OpenLattice) -> impl Strategy<Value = Cover> {
    let opens: Vec<u64> = lattice.opens().iter().copied().filter(|&o| o != 0).collect();
    let lattice = lattice.clone();
    prop::collection::vec(prop::sample::select(opens), 1..5).prop_map(move |mut m| {
        m.push(lattice.ground());
        m.dedup();
        // prefer the sampled opens alone; fall back to adding the whole space
        let rest: Vec<u64> = m[..m.len() - 1].to_vec();
        let rest_cover = Cover::new(&lattice, rest).ok();
        rest_cover.unwrap_or_else(|| Cover::new(&lattice, m).unwrap())
    })
}

fn circle() -> OpenLattice {
    OpenLattice::face_poset(&mdkit::complex::build_en_zp(2, 1).unwrap(), 1 << 16).unwrap()
}

proptest! {
    #[test]
    fn d_laws_on_the_circle(a in lattice_cover(&circle()), b in lattice_cover(&circle())) {
        let l = circle();
        let da = cover_d(&l, &a, COVER_D_CAP).unwrap();
        let db = cover_d(&l, &b, COVER_D_CAP).unwrap();
        prop_assert!(da >= 0 && da <= cover_ord(&a));
        let ab = cover_join(&l, &a, &b).unwrap();
        let dab = cover_d(&l, &ab, COVER_D_CAP).unwrap();
        prop_assert!(ab.refines(&a) && ab.refines(&b));
        prop_assert!(dab >= da.max(db));
        prop_assert!(dab <= da + db);
        if b.refines(&a) {
            prop_assert!(db >= da);
        }
    }

    #[test]
    fn d_laws_on_the_interval(a in lattice_cover(&OpenLattice::interval_model()), b in lattice_cover(&OpenLattice::interval_model())) {
        let l = OpenLattice::interval_model();
        let da = cover_d(&l, &a, COVER_D_CAP).unwrap();
        let db = cover_d(&l, &b, COVER_D_CAP).unwrap();
        let dab = cover_d(&l, &cover_join(&l, &a, &b).unwrap(), COVER_D_CAP).unwrap();
        prop_assert!(da <= 1 && dab >= da.max(db) && dab <= da + db);
    }
}

#[derive(Clone, Debug)]
enum Step {
    Ambient(u64),
    Subsystem,
    Power(u64),
    Limit(usize),
    Divide(u64),
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        (1u64..50).prop_map(Step::Ambient),
        Just(Step::Subsystem),
        (1u64..20).prop_map(Step::Power),
        (1usize..4).prop_map(Step::Limit),
        (1u64..20).prop_map(Step::Divide),
    ]
}

proptest! {
    #[test]
    fn mdim_intervals_never_invert(steps in prop::collection::vec(step(), 1..12)) {
        let mut stack: Vec<MdimBound<Rational>> = Vec::new();
        for s in steps {
            let next = match s {
                Step::Ambient(n) => mdim_combine(&MdimRule::AmbientShift { n }, &[]),
                Step::Subsystem => match stack.pop() {
                    Some(b) => mdim_combine(&MdimRule::Subsystem, &[b]),
                    None => continue,
                },
                Step::Power(n) => match stack.pop() {
                    Some(b) => mdim_combine(&MdimRule::Power { n }, &[b]),
                    None => continue,
                },
                Step::Limit(k) => {
                    if stack.is_empty() {
                        continue;
                    }
                    let inputs = stack.split_off(stack.len().saturating_sub(k));
                    mdim_combine(&MdimRule::InverseLimit, &inputs)
                }
                Step::Divide(n) => match stack.pop() {
                    Some(b) => mdim_combine(&MdimRule::TimeDivision { n }, &[b]),
                    None => continue,
                },
            };
            let b = next.unwrap();
            prop_assert!(b.lower >= Rational::from_int(0));
            if let Some(u) = &b.upper {
                prop_assert!(&b.lower <= u);
            }
            stack.push(b);
        }
    }
}
