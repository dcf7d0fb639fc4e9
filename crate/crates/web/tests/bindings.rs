use pointsynth_web::{kinds, sample, spectrum, Synthesizer};

#[test]
fn sample_and_spectrum_round_trip() {
    let pts = sample("binomial", 3).unwrap();
    assert_eq!(pts.len() % 2, 0);
    let p = spectrum(&pts, 10).unwrap();
    assert_eq!(p.len(), 10);
    assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(kinds().contains(&"cox_voronoi".to_string()));
}

#[test]
fn synthesizer_lowers_energy_and_finishes() {
    let obs = sample("matern_cluster", 1).unwrap();
    let mut s = Synthesizer::new(&obs, 16, 6, 2).unwrap();
    let mut energies = Vec::new();
    while s.step(3).unwrap() {
        energies.push(s.relative_energy());
    }
    assert!(s.done());
    assert_eq!(s.points().len(), obs.len());
    assert!(energies.iter().all(|e| e.is_finite()));
    assert!(s.relative_energy() < energies[0]);
}
