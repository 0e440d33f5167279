//! Pinned reference values (scipy / statsmodels, regenerated by
//! `tests/oracle/gen_stats_fixtures.py`). Statistics must agree to 1e-6,
//! approximate p-values to 1e-3, enumeration p-values exactly.

use hsmod_core::curation::fleiss_kappa;
use hsmod_core::stats::{
    kruskal_wallis, mann_whitney_u, one_way_anova, shapiro_wilk, t_test_two_tailed, wilcoxon_signed_rank,
};
use serde_json::Value;

const STAT_TOL: f64 = 1e-6;
const P_TOL: f64 = 1e-3;

fn fixtures() -> Value {
    serde_json::from_str(include_str!("fixtures/stats_oracle.json")).unwrap()
}

fn vec_f64(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn groups(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(vec_f64).collect()
}

fn cases(name: &str) -> Vec<Value> {
    let all = fixtures();
    let cases = all[name].as_array().unwrap().clone();
    assert!(cases.len() >= 20, "{name}: only {} fixtures", cases.len());
    cases
}

fn close(label: &str, got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "{label}: got {got}, want {want} (tol {tol})");
}

#[test]
fn shapiro_wilk_matches_reference() {
    for c in cases("shapiro_wilk") {
        let name = c["name"].as_str().unwrap();
        let r = shapiro_wilk(&vec_f64(&c["x"])).unwrap();
        close(name, r.statistic, c["w"].as_f64().unwrap(), STAT_TOL);
        close(name, r.p_value, c["p"].as_f64().unwrap(), P_TOL);
    }
}

#[test]
fn anova_matches_reference() {
    for c in cases("anova") {
        let name = c["name"].as_str().unwrap();
        let g = groups(&c["groups"]);
        let refs: Vec<&[f64]> = g.iter().map(Vec::as_slice).collect();
        let r = one_way_anova(&refs).unwrap();
        close(name, r.statistic, c["f"].as_f64().unwrap(), STAT_TOL * c["f"].as_f64().unwrap().max(1.0));
        close(name, r.p_value, c["p"].as_f64().unwrap(), P_TOL);
    }
}

#[test]
fn kruskal_wallis_matches_reference() {
    for c in cases("kruskal_wallis") {
        let name = c["name"].as_str().unwrap();
        let g = groups(&c["groups"]);
        let refs: Vec<&[f64]> = g.iter().map(Vec::as_slice).collect();
        let r = kruskal_wallis(&refs).unwrap();
        close(name, r.statistic, c["h"].as_f64().unwrap(), STAT_TOL);
        close(name, r.p_value, c["p"].as_f64().unwrap(), P_TOL);
    }
}

#[test]
fn welch_t_matches_reference() {
    for c in cases("welch_t") {
        let name = c["name"].as_str().unwrap();
        let r = t_test_two_tailed(&vec_f64(&c["a"]), &vec_f64(&c["b"])).unwrap();
        close(name, r.statistic, c["t"].as_f64().unwrap(), STAT_TOL);
        close(name, r.df[0], c["df"].as_f64().unwrap(), STAT_TOL);
        close(name, r.p_value, c["p"].as_f64().unwrap(), P_TOL);
    }
}

#[test]
fn mann_whitney_matches_reference() {
    for c in cases("mann_whitney") {
        let name = c["name"].as_str().unwrap();
        let r = mann_whitney_u(&vec_f64(&c["a"]), &vec_f64(&c["b"])).unwrap();
        close(name, r.statistic, c["u"].as_f64().unwrap(), STAT_TOL);
        if c["exact"].as_bool().unwrap() {
            let exact = r.exact.unwrap_or_else(|| panic!("{name}: expected exact path"));
            assert_eq!(exact.tail_count, c["tail_count"].as_u64().unwrap() as u128, "{name}");
            assert_eq!(exact.total, c["total"].as_u64().unwrap() as u128, "{name}");
            close(name, r.p_value, c["p"].as_f64().unwrap(), 1e-12);
            if let Some(brute) = c.get("brute_count") {
                // brute force counts both tails directly
                assert_eq!(2 * exact.tail_count, brute.as_u64().unwrap() as u128);
                assert_eq!(exact.total, c["brute_total"].as_u64().unwrap() as u128);
            }
        } else {
            assert!(r.exact.is_none(), "{name}: expected approximate path");
            close(name, r.p_value, c["p"].as_f64().unwrap(), P_TOL);
        }
    }
}

#[test]
fn wilcoxon_matches_reference() {
    for c in cases("wilcoxon") {
        let name = c["name"].as_str().unwrap();
        let r = wilcoxon_signed_rank(&vec_f64(&c["pre"]), &vec_f64(&c["post"])).unwrap();
        close(name, r.statistic, c["w"].as_f64().unwrap(), STAT_TOL);
        assert_eq!(r.ns[0] as u64, c["n_effective"].as_u64().unwrap(), "{name}");
        if c["exact"].as_bool().unwrap() {
            let exact = r.exact.unwrap_or_else(|| panic!("{name}: expected exact path"));
            assert_eq!(exact.tail_count, c["tail_count"].as_u64().unwrap() as u128, "{name}");
            assert_eq!(exact.total, c["total"].as_u64().unwrap() as u128, "{name}");
            close(name, r.p_value, c["p"].as_f64().unwrap(), 1e-12);
        } else {
            assert!(r.exact.is_none(), "{name}: expected approximate path");
            close(name, r.p_value, c["p"].as_f64().unwrap(), P_TOL);
        }
    }
}

#[test]
fn fleiss_kappa_matches_reference() {
    for c in cases("fleiss_kappa") {
        let name = c["name"].as_str().unwrap();
        let counts: Vec<Vec<u32>> = c["counts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|row| row.as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as u32).collect())
            .collect();
        let raters = counts[0].iter().sum::<u32>();
        let k: f64 = fleiss_kappa(&counts, raters).unwrap();
        close(name, k, c["kappa"].as_f64().unwrap(), STAT_TOL);
    }
}
