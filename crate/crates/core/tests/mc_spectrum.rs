use fluorospec::config::preset_params;
use fluorospec::spectrum::{linear_grid, mc_spectrum, s_inel, elastic_line};
use fluorospec::trajectories::{simulate_physical, Estimate, SimConfig};

#[test]
fn squeezed_spectrum_estimate_matches_closed_form() {
    let p = preset_params("fig1_case1").unwrap();
    let ens = simulate_physical(&p, &SimConfig::for_gamma(p.gamma)).unwrap();
    let grid: Vec<f64> = linear_grid(-4.0, 4.0, 81).into_iter().filter(|m| m.abs() >= 0.2 - 1e-12).collect();
    let res = mc_spectrum(&ens, &grid).unwrap();
    let stderr = res.stderr.unwrap();
    for ((mu, v), se) in grid.iter().zip(&res.s_inel).zip(&stderr) {
        let exact = s_inel(&p, *mu).unwrap();
        let z = Estimate { mean: *v, stderr: *se }.z_score(exact);
        assert!(z.abs() <= 4.0, "mu = {mu}: {v} ± {se} vs {exact}");
    }
    let (m, _) = elastic_line(&p).unwrap();
    assert!((res.elastic_mean - m).abs() <= 0.02, "{} vs {m}", res.elastic_mean);
}
