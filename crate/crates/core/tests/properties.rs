use proptest::prelude::*;

use rydberg_xpm::blockade::{blockade_radius, hard_sphere_controlled_phase, vdw_shift};
use rydberg_xpm::constants::angular_from_mhz as mhz;
use rydberg_xpm::fitting::FitParams;
use rydberg_xpm::photostatistics::{CountTotals, ShotRecord};
use rydberg_xpm::polarization::Basis;
use rydberg_xpm::susceptibility::{chi, od_and_phase, EitParams, MediumGeometry};

fn eit_params() -> impl Strategy<Value = EitParams> {
    (0.0..2.0f64, 0.0..40.0f64, -20.0..20.0f64, 1e16..1e19f64).prop_map(|(g, w, dc, rho)| {
        EitParams {
            gamma_rg: mhz(g),
            omega_c: mhz(w),
            delta_c: mhz(dc),
            rho,
            ..EitParams::reference()
        }
    })
}

fn record() -> impl Strategy<Value = ShotRecord> {
    (0usize..3, any::<bool>(), 0u32..20, 0u32..20).prop_map(|(b, ret, k, l)| ShotRecord {
        basis: Basis::ALL[b],
        control_stored: ret,
        control_retrieved: ret,
        target_counts_k: k,
        target_counts_l: l,
    })
}

proptest! {
    #[test]
    fn medium_is_passive(p in eit_params(), ds in -100.0..100.0f64) {
        let c = chi(&p, mhz(ds));
        prop_assert!(c.im >= 0.0);
        let t = od_and_phase(&c, &MediumGeometry::reference()).transmission();
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn exact_eit_is_transparent(od in 0.0..50.0f64, omega in 0.5..40.0f64, dc in -20.0..20.0f64) {
        let g = MediumGeometry::reference();
        let base = EitParams { gamma_rg: 0.0, omega_c: mhz(omega), delta_c: mhz(dc), ..EitParams::reference() };
        let p = FitParams { od_peak: od, ..FitParams::from_eit(&base, &g) }.to_eit(&base, &g);
        let r = od_and_phase(&chi(&p, -p.delta_c), &g);
        prop_assert!(r.transmission() >= 0.999);
        prop_assert!(r.phase.abs() <= 1e-6);
    }

    #[test]
    fn reversing_both_detunings_mirrors_dispersion(p in eit_params(), ds in -50.0..50.0f64) {
        let a = chi(&p, mhz(ds));
        let b = chi(&p.sign_reversed(), -mhz(ds));
        prop_assert!((a.im - b.im).abs() <= 1e-12 * a.im.abs().max(1e-300));
        prop_assert!((a.re + b.re).abs() <= 1e-12 * a.re.abs().max(1e-300));
    }

    #[test]
    fn vdw_shift_scales_with_inverse_sixth_power(c6 in 1e-60..1e-54f64, r in 1e-7..1e-4f64) {
        let far = vdw_shift(c6, r).unwrap();
        let near = vdw_shift(c6, r / 2.0).unwrap();
        prop_assert!((near / far - 64.0).abs() < 1e-9);
        prop_assert!(far < 0.0);
    }

    #[test]
    fn blockade_radius_inverts_the_shift(c6 in 1e-60..1e-54f64, dt in 0.1..50.0f64) {
        let r = blockade_radius(c6, mhz(dt)).unwrap();
        let shift = vdw_shift(c6, r).unwrap();
        prop_assert!((shift.abs() / mhz(dt) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hard_sphere_grows_with_radius(r1 in 0.0..30e-6f64, dr in 0.0..10e-6f64, diff in 0.0..10.0f64) {
        let g = MediumGeometry::reference();
        let a = hard_sphere_controlled_phase(r1, &g, diff, 0.0).unwrap().controlled_phase;
        let b = hard_sphere_controlled_phase(r1 + dr, &g, diff, 0.0).unwrap().controlled_phase;
        prop_assert!(b >= a);
        prop_assert!(b <= diff + 1e-12);
    }

    #[test]
    fn estimates_are_bounded(records in prop::collection::vec(record(), 1..200), post in any::<bool>()) {
        let t = CountTotals::from_records(&records, post);
        if let Ok(s) = t.estimate() {
            for (v, e) in [s.stokes.s_hv, s.stokes.s_da, s.stokes.s_lr].iter().zip(s.std_errors) {
                prop_assert!((-1.0..=1.0).contains(v));
                prop_assert!(e >= 0.0);
            }
            prop_assert!(s.visibility <= 2f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn totals_merge_in_any_split(records in prop::collection::vec(record(), 0..100), cut in 0usize..100) {
        let cut = cut.min(records.len());
        let whole = CountTotals::from_records(&records, false);
        let left = CountTotals::from_records(&records[..cut], false);
        let right = CountTotals::from_records(&records[cut..], false);
        prop_assert_eq!(whole, right.merge(left));
    }

    #[test]
    fn fit_parameters_round_trip(p in eit_params()) {
        let g = MediumGeometry::reference();
        let back = FitParams::from_eit(&p, &g).to_eit(&p, &g);
        prop_assert!(((back.rho - p.rho) / p.rho).abs() < 1e-13);
        prop_assert_eq!(back.omega_c, p.omega_c);
    }
}
