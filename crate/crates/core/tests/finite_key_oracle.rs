mod oracle;

use qkd_sift::finite_key::{azuma_tail, binary_entropy, key_length, phase_error_bound};

#[test]
fn oracle_reproduces_worked_values() {
    assert_eq!(oracle::key_length(1000, 0.0, 1e-10, 1e-21, 0, 1e-10).1, 898);
    // 0.1 and 0.05 are not exact in binary, hence the 1e-14 slack.
    assert!(oracle::rel_err(oracle::azuma_eta_single(1000, 0.1) / 6.737_946_999_085_467e-3, 1.0) < 1e-14);
    assert!(oracle::rel_err(oracle::azuma_eta_single(10_000, 0.05) / 3.726_653_172_078_671e-6, 1.0) < 1e-14);
    assert_eq!(oracle::phase_error_bound(30, 0.81, 0.01, 10_000, 0.01), 10630.0);
    let h = oracle::binary_entropy(&oracle::Fx::from_f64(0.11)).to_f64();
    assert!((binary_entropy(0.11).unwrap() - h).abs() < 1e-15);
}

#[test]
fn key_length_agrees_with_oracle() {
    let grid = oracle::key_length_grid();
    assert_eq!(grid.len(), 1000);
    for p in grid {
        let got = key_length(p.n_z, p.e, p.eps_s, p.eta, p.lambda_ec, p.eps_c).unwrap();
        let (raw, l) = oracle::key_length(p.n_z, p.e, p.eps_s, p.eta, p.lambda_ec, p.eps_c);
        assert!(oracle::rel_err(got.terms.raw(), raw) <= 1e-9, "{p:?}: {} vs {raw}", got.terms.raw());
        // Floors may differ only when the exact value sits on an integer.
        if (raw - raw.round()).abs() > 1e-6 {
            assert_eq!(got.l, l, "{p:?}");
        }
    }
}

#[test]
fn azuma_tail_agrees_with_oracle() {
    for (n, delta) in oracle::azuma_grid() {
        let got = azuma_tail(n, delta).unwrap();
        let want = oracle::azuma_eta_single(n, delta);
        assert!((got.eta_single - want).abs() <= 1e-9 * want, "n={n} δ={delta}: {} vs {want}", got.eta_single);
    }
}

#[test]
fn phase_error_bound_agrees_with_oracle() {
    for (wt, q_z, q_x, n, delta) in oracle::phase_bound_grid() {
        let got = phase_error_bound(wt, q_z, q_x, n, delta).unwrap();
        let want = oracle::phase_error_bound(wt, q_z, q_x, n, delta);
        assert!(oracle::rel_err(got, want) <= 1e-9, "{got} vs {want}");
    }
}
