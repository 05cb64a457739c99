//! Browser bindings: certify a map, sample its image, and run the joint
//! numerical range reduction, all on JSON problem text.

use quadrascope::convexity::{certify, CertificateStatus, CertifyConfig, ZmaxConfig};
use quadrascope::io::{self, parse_problem};
use quadrascope::jnr::{certify_reduction, JnrConfig};
use quadrascope::oracle::{sample_image, Region};
use wasm_bindgen::prelude::*;

/// Convexity certificate for a problem, as JSON.
#[wasm_bindgen]
pub fn analyze(problem: &str, seed: u64) -> Result<String, JsError> {
    analyze_text(problem, seed).map_err(|e| JsError::new(&e))
}

/// Image points `[y1, y2, y1, y2, ...]` (first two coordinates) over a
/// region: "full" (ball of radius `z`), "slab", "sphere" (height `z`, or 0.95
/// of the radius when `z` is NaN) or "jnr".
#[wasm_bindgen]
pub fn sample_cloud(problem: &str, region: &str, z: f64, count: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    sample_text(problem, region, z, count, seed).map_err(|e| JsError::new(&e))
}

/// Reduction certificate for a matrix tuple, as JSON.
#[wasm_bindgen]
pub fn jnr_scan(problem: &str, seed: u64) -> Result<String, JsError> {
    jnr_text(problem, seed).map_err(|e| JsError::new(&e))
}

fn config(seed: u64) -> CertifyConfig {
    CertifyConfig { zmax: ZmaxConfig { seed, ..ZmaxConfig::default() }, ..CertifyConfig::default() }
}

pub fn analyze_text(problem: &str, seed: u64) -> Result<String, String> {
    let parsed = parse_problem(problem).map_err(|e| e.to_string())?;
    let map = parsed.problem.to_map();
    let cert = certify(&map, &config(seed)).map_err(|e| e.to_string())?;
    Ok(io::certificate_json(&map, &cert, seed, &parsed.warnings).to_string())
}

pub fn sample_text(problem: &str, region: &str, z: f64, count: usize, seed: u64) -> Result<Vec<f64>, String> {
    let parsed = parse_problem(problem).map_err(|e| e.to_string())?;
    let map = parsed.problem.to_map();
    let region = match region {
        "full" => Region::FullSpace { radius: if z.is_nan() { 1.0 } else { z } },
        "jnr" => Region::UnitSphere,
        "slab" | "sphere" => {
            let cert = certify(&map, &config(seed)).map_err(|e| e.to_string())?;
            let z = match (&cert.status, z.is_nan()) {
                (_, false) => z,
                (CertificateStatus::SlabConvex { z_max }, true) => 0.95 * z_max,
                (CertificateStatus::FullImageConvex, true) => 1.0,
                (CertificateStatus::Inconclusive { reason }, true) => return Err(reason.clone()),
            };
            let frame = cert.frame.ok_or("no supporting frame")?;
            if region == "slab" {
                Region::Slab { frame, z }
            } else {
                Region::Sphere { frame, z }
            }
        }
        other => return Err(format!("unknown region {other:?}")),
    };
    let cloud = sample_image(&map, &region, count, seed).map_err(|e| e.to_string())?;
    Ok(cloud.points.iter().flat_map(|p| [p[0], p.get(1).copied().unwrap_or(0.0)]).collect())
}

pub fn jnr_text(problem: &str, seed: u64) -> Result<String, String> {
    let parsed = parse_problem(problem).map_err(|e| e.to_string())?;
    let tuple = parsed.problem.to_tuple().map_err(|e| e.to_string())?;
    let config = JnrConfig { seed, zmax: ZmaxConfig { seed, ..ZmaxConfig::default() }, ..JnrConfig::default() };
    let cert = certify_reduction(&tuple, None, &config).map_err(|e| e.to_string())?;
    let tols = [("kernel_tol", config.zmax.tolerances.kernel_tol), ("residual_tol", config.zmax.tolerances.residual_tol), ("multiplicity_tol", config.tol)];
    Ok(io::jnr_json(&tuple, &cert, seed, &tols, &parsed.warnings).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIX_A: &str = r#"{"field":"real","n":2,"m":2,"A":[[[1,0],[0,1]],[[1,0],[0,-1]]],"v":[[0,0],[0,1]],"f0":[0,0]}"#;
    const FIX_B: &str = r#"{"field":"real","n":3,"m":2,"A":[[[2,0,-1.5],[0,-2,1.5],[-1.5,1.5,0]],[[0,0,0],[0,0,0],[0,0,1]]]}"#;

    #[test]
    fn analyze_matches_the_fixture() {
        assert!(analyze_text(FIX_A, 0).unwrap().contains(r#""status":"slab_convex","z_max":0.25"#));
    }

    #[test]
    fn sphere_cloud_sits_at_the_requested_height() {
        let pts = sample_text(FIX_A, "sphere", 0.2, 40, 1).unwrap();
        assert_eq!(pts.len(), 80);
        assert!(pts.chunks(2).all(|p| (p[0] - 0.2).abs() < 1e-12));
    }

    #[test]
    fn slab_default_height_is_below_the_radius() {
        let pts = sample_text(FIX_A, "slab", f64::NAN, 200, 2).unwrap();
        assert!(pts.chunks(2).all(|p| p[0] <= 0.95 * 0.25 + 1e-12));
    }

    #[test]
    fn tuple_is_certified_by_reduction() {
        assert!(jnr_text(FIX_B, 0).unwrap().contains(r#""status":"convex_by_reduction""#));
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(sample_text(FIX_A, "torus", 1.0, 10, 0).is_err());
        assert!(analyze_text("{", 0).is_err());
    }
}
