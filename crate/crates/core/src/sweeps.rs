//! Configuration ingestion, the point-evaluation pipeline, parameter
//! sweeps, threshold finding, and CSV/SVG/provenance emission.

use crate::dynamics::{
    assess_stability, build_linear_model, effective_response, EffectiveResponse, StabilityVerdict,
};
use crate::entanglement::{log_negativity, EntanglementReport};
use crate::error::{Error, Result};
use crate::lyapunov::{
    lyapunov_residual, solve_lyapunov_direct, solve_lyapunov_elimination, CovarianceMatrix,
};
use crate::params::{derive_quantities, validate_parameters, ParameterSet, CONSTANTS};
use crate::steadystate::{steady_state, SteadyState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Quantity swept along the axis of a figure reproduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Temperature,
    Detuning,
    AngularMomentum,
    Mass,
}

impl SweepAxis {
    pub fn apply(&self, base: &ParameterSet, value: f64) -> ParameterSet {
        let mut p = *base;
        match self {
            SweepAxis::Temperature => p.temperature = value,
            SweepAxis::Detuning => p.detuning = value,
            SweepAxis::AngularMomentum => p.l = value,
            SweepAxis::Mass => p.mass = value,
        }
        p
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Temperature => "temperature",
            SweepAxis::Detuning => "detuning",
            SweepAxis::AngularMomentum => "angular_momentum",
            SweepAxis::Mass => "mass",
        }
    }
}

/// A resolved sweep: base parameters plus the ordered axis grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: ParameterSet,
    /// Run the elimination solver as a cross-check at every point.
    pub verify_solvers: bool,
}

impl SweepSpec {
    pub fn from_range(
        axis: SweepAxis,
        base: ParameterSet,
        min: f64,
        max: f64,
        points: usize,
    ) -> Result<Self> {
        if points == 0 || !(min <= max) {
            return Err(Error::Config(format!(
                "empty sweep range: min={min}, max={max}, points={points}"
            )));
        }
        let values = if points == 1 {
            vec![min]
        } else {
            (0..points)
                .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
                .collect()
        };
        Ok(SweepSpec { axis, values, base, verify_solvers: false })
    }
}

/// Full evaluation of a single operating point.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub parameters: ParameterSet,
    pub steady: SteadyState,
    pub response: EffectiveResponse,
    pub verdict: StabilityVerdict,
    /// Present only at stable points.
    pub covariance: Option<CovarianceMatrix>,
    pub report: Option<EntanglementReport>,
}

/// One sweep row. Entanglement fields are absent (never zero-filled) at
/// unstable or failed points.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: f64,
    pub amplitude: Option<f64>,
    pub coupling_eff: Option<f64>,
    pub stable: Option<bool>,
    pub omega_eff: Option<f64>,
    pub nbar: Option<f64>,
    pub t_eff: Option<f64>,
    pub eta_minus: Option<f64>,
    pub log_negativity: Option<f64>,
    pub nu_min: Option<f64>,
    pub error: Option<String>,
}

/// Sweep output with full provenance.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub base: ParameterSet,
}

/// Solver and convergence tolerances pinned by the pipeline; recorded in
/// the provenance sidecar of every sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub lyapunov_residual_max: f64,
    pub solver_cross_check_rel: f64,
    pub effective_frequency_rel: f64,
    pub threshold_axis_rel: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    lyapunov_residual_max: 1e-10,
    solver_cross_check_rel: 1e-8,
    effective_frequency_rel: 1e-10,
    threshold_axis_rel: 1e-6,
};

/// Run the whole pipeline at one validated operating point:
/// derive, steady state, effective response (which fixes nbar at the
/// effective frequency), linear model, stability, covariance,
/// entanglement.
pub fn evaluate_point(p: &ParameterSet, verify_solvers: bool) -> Result<PointEvaluation> {
    let p = validate_parameters(p)?;
    evaluate_point_unchecked(&p, verify_solvers)
}

/// Pipeline without re-validation; also used by threshold refinement,
/// which may probe fractional angular momenta between grid points.
pub fn evaluate_point_unchecked(p: &ParameterSet, verify_solvers: bool) -> Result<PointEvaluation> {
    let d = derive_quantities(p, &CONSTANTS);
    let steady = steady_state(p, &d)?;
    let response = effective_response(&steady, p, &d)?;
    let model = build_linear_model(&steady, p, &d, response.nbar);
    let verdict = assess_stability(&model)?;
    if verdict.spectral_abscissa >= 0.0 {
        return Ok(PointEvaluation {
            parameters: *p,
            steady,
            response,
            verdict,
            covariance: None,
            report: None,
        });
    }
    let cov = solve_lyapunov_direct(&model)?;
    if verify_solvers {
        let alt = solve_lyapunov_elimination(&model)?;
        let scale = cov.matrix.amax().max(f64::MIN_POSITIVE);
        let diff = (cov.matrix - alt.matrix).amax() / scale;
        if diff > TOLERANCES.solver_cross_check_rel {
            return Err(Error::UnphysicalCovariance(format!(
                "solver cross-check disagreement {diff:e}"
            )));
        }
    }
    let residual = lyapunov_residual(&model, &cov);
    if residual > TOLERANCES.lyapunov_residual_max {
        return Err(Error::UnphysicalCovariance(format!(
            "Lyapunov residual {residual:e} above tolerance"
        )));
    }
    let report = log_negativity(&cov)?;
    Ok(PointEvaluation {
        parameters: *p,
        steady,
        response,
        verdict,
        covariance: Some(cov),
        report: Some(report),
    })
}

fn row_for(axis_value: f64, outcome: Result<PointEvaluation>) -> SweepRow {
    match outcome {
        Ok(ev) => SweepRow {
            axis_value,
            amplitude: Some(ev.steady.amplitude),
            coupling_eff: Some(ev.steady.coupling_eff),
            stable: Some(ev.verdict.spectral_abscissa < 0.0),
            omega_eff: Some(ev.response.omega_eff),
            nbar: Some(ev.response.nbar),
            t_eff: Some(ev.response.t_eff),
            eta_minus: ev.report.map(|r| r.eta_minus),
            log_negativity: ev.report.map(|r| r.log_negativity),
            nu_min: ev.report.map(|r| r.nu_min),
            error: None,
        },
        Err(e) => SweepRow {
            axis_value,
            amplitude: None,
            coupling_eff: None,
            stable: None,
            omega_eff: None,
            nbar: None,
            t_eff: None,
            eta_minus: None,
            log_negativity: None,
            nu_min: None,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluate every axis value. Points run in parallel; collection
/// preserves axis order, and per-point failures are recorded in their
/// rows without aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    validate_parameters(&spec.base)?;
    let rows: Vec<SweepRow> = spec
        .values
        .par_iter()
        .map(|&v| {
            let p = spec.axis.apply(&spec.base, v);
            row_for(v, evaluate_point_unchecked(&p, spec.verify_solvers))
        })
        .collect();
    Ok(SweepResult { axis: spec.axis, rows, base: spec.base })
}

/// Locate the axis value where the swept quantity first becomes positive,
/// refining the bracketing grid interval by bisection against `entangled`.
/// Returns `None` when no bracket exists.
pub fn find_threshold_with(
    rows: &[SweepRow],
    entangled: impl Fn(f64) -> bool,
) -> Option<f64> {
    let positive = |row: &SweepRow| row.log_negativity.map(|e| e > 0.0);
    let mut bracket = None;
    for pair in rows.windows(2) {
        if let (Some(a), Some(b)) = (positive(&pair[0]), positive(&pair[1])) {
            if a != b {
                bracket = Some((pair[0].axis_value, pair[1].axis_value));
                break;
            }
        }
    }
    let (mut lo, mut hi) = bracket?;
    let lo_state = entangled(lo);
    for _ in 0..40 {
        if (hi - lo).abs() <= TOLERANCES.threshold_axis_rel * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if entangled(mid) == lo_state {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Threshold of `E_N` along the sweep axis, re-evaluating the pipeline
/// during bisection refinement. Only `"E_N"` is a recognized quantity.
pub fn find_threshold(result: &SweepResult, target: &str) -> Option<f64> {
    if target != "E_N" {
        return None;
    }
    find_threshold_with(&result.rows, |v| {
        let p = result.axis.apply(&result.base, v);
        evaluate_point_unchecked(&p, false)
            .ok()
            .and_then(|ev| ev.report)
            .map(|r| r.log_negativity > 0.0)
            .unwrap_or(false)
    })
}

fn fmt_opt(buf: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        write!(buf, "{v}").unwrap();
    }
}

/// Render the result as a CSV document. Byte-identical for identical
/// input: floats use shortest round-trip formatting.
pub fn to_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "axis_value,a_s,G,stable,omega_eff,nbar,T_eff,eta_minus,E_N,nu_min\n",
    );
    for row in &result.rows {
        write!(out, "{}", row.axis_value).unwrap();
        out.push(',');
        fmt_opt(&mut out, row.amplitude);
        out.push(',');
        fmt_opt(&mut out, row.coupling_eff);
        out.push(',');
        if let Some(s) = row.stable {
            out.push_str(if s { "true" } else { "false" });
        }
        out.push(',');
        fmt_opt(&mut out, row.omega_eff);
        out.push(',');
        fmt_opt(&mut out, row.nbar);
        out.push(',');
        fmt_opt(&mut out, row.t_eff);
        out.push(',');
        fmt_opt(&mut out, row.eta_minus);
        out.push(',');
        fmt_opt(&mut out, row.log_negativity);
        out.push(',');
        fmt_opt(&mut out, row.nu_min);
        out.push('\n');
    }
    out
}

/// Minimal static vector plot of E_N against the axis.
pub fn to_svg(result: &SweepResult) -> String {
    let (w, h, ml, mb) = (640.0, 440.0, 70.0, 50.0);
    let pts: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter_map(|r| r.log_negativity.map(|e| (r.axis_value, e)))
        .collect();
    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
    .unwrap();
    if !pts.is_empty() {
        let (xmin, xmax) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.0), b.max(p.0))
            });
        let ymax = pts.iter().map(|p| p.1).fold(1e-12_f64, f64::max);
        let sx = |x: f64| {
            if xmax > xmin {
                ml + (x - xmin) / (xmax - xmin) * (w - ml - 20.0)
            } else {
                ml
            }
        };
        let sy = |y: f64| (h - mb) - y / ymax * (h - mb - 20.0);
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        write!(
            svg,
            "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        )
        .unwrap();
        write!(
            svg,
            "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <line x1=\"{ml}\" y1=\"20\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>\n",
            y = h - mb,
            x2 = w - 20.0,
        )
        .unwrap();
        write!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"16\" y=\"{:.1}\" font-size=\"13\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">E_N</text>\n",
            (ml + w - 20.0) / 2.0,
            h - 12.0,
            result.axis.name(),
            (h - mb) / 2.0,
            (h - mb) / 2.0,
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Serialize)]
struct Provenance<'a> {
    axis: &'a str,
    points: usize,
    parameters: &'a ParameterSet,
    tolerances: Tolerances,
}

/// Provenance sidecar: resolved parameters and solver tolerances.
pub fn to_provenance(result: &SweepResult) -> String {
    toml::to_string_pretty(&Provenance {
        axis: result.axis.name(),
        points: result.rows.len(),
        parameters: &result.base,
        tolerances: TOLERANCES,
    })
    .expect("provenance serialization cannot fail")
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Emit `{prefix}.csv`, `{prefix}.svg` and `{prefix}.provenance.toml`.
/// Returns the written paths.
pub fn render_outputs(result: &SweepResult, prefix: &Path) -> Result<Vec<PathBuf>> {
    let with_ext = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    let csv = with_ext(".csv");
    let svg = with_ext(".svg");
    let prov = with_ext(".provenance.toml");
    write_file(&csv, &to_csv(result))?;
    write_file(&svg, &to_svg(result))?;
    write_file(&prov, &to_provenance(result))?;
    Ok(vec![csv, svg, prov])
}

// ---------------------------------------------------------------------------
// configuration parsing

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "L")]
    cavity_length: Option<f64>,
    lambda: Option<f64>,
    omega_phi: Option<f64>,
    #[serde(rename = "M")]
    mass: Option<f64>,
    #[serde(rename = "R")]
    radius: Option<f64>,
    #[serde(rename = "Q_phi")]
    quality: Option<f64>,
    finesse: Option<f64>,
    l: Option<f64>,
    #[serde(rename = "P_in")]
    power: Option<f64>,
    #[serde(rename = "Delta")]
    detuning: Option<f64>,
    #[serde(rename = "T")]
    temperature: Option<f64>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: SweepAxis,
    min: Option<f64>,
    max: Option<f64>,
    points: Option<usize>,
    values: Option<Vec<f64>>,
}

/// Parse a flat key-value configuration document. Unspecified physical
/// fields fall back to the tabulated defaults; unknown keys are rejected
/// with their name and location.
pub fn parse_config(text: &str) -> Result<(ParameterSet, Option<SweepSpec>)> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let base = ParameterSet::default();
    let p = ParameterSet {
        cavity_length: raw.cavity_length.unwrap_or(base.cavity_length),
        wavelength: raw.lambda.unwrap_or(base.wavelength),
        omega_phi: raw.omega_phi.unwrap_or(base.omega_phi),
        mass: raw.mass.unwrap_or(base.mass),
        radius: raw.radius.unwrap_or(base.radius),
        quality: raw.quality.unwrap_or(base.quality),
        finesse: raw.finesse.unwrap_or(base.finesse),
        l: raw.l.unwrap_or(base.l),
        power: raw.power.unwrap_or(base.power),
        detuning: raw.detuning.unwrap_or(base.detuning),
        temperature: raw.temperature.unwrap_or(base.temperature),
    };
    let p = validate_parameters(&p)?;
    let sweep = match raw.sweep {
        None => None,
        Some(s) => Some(match s.values {
            Some(values) => {
                if values.is_empty() {
                    return Err(Error::Config("sweep.values must be non-empty".into()));
                }
                SweepSpec { axis: s.axis, values, base: p, verify_solvers: false }
            }
            None => {
                let (min, max, points) = match (s.min, s.max, s.points) {
                    (Some(a), Some(b), Some(n)) => (a, b, n),
                    _ => {
                        return Err(Error::Config(
                            "sweep needs min, max and points (or an explicit values list)".into(),
                        ))
                    }
                };
                SweepSpec::from_range(s.axis, p, min, max, points)?
            }
        }),
    };
    Ok((p, sweep))
}

/// Serialize a parameter set back to the configuration syntax.
pub fn to_config(p: &ParameterSet) -> String {
    toml::to_string_pretty(p).expect("parameter serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_config_gives_table_defaults() {
        let (p, sweep) = parse_config("").unwrap();
        assert_eq!(p, ParameterSet::default());
        assert!(sweep.is_none());
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let err = parse_config("mass = -1.0").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mass"), "{msg}");
    }

    #[test]
    fn out_of_domain_value_names_field() {
        let err = parse_config("M = -1.0").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { field: "M", .. }));
    }

    #[test]
    fn config_round_trip() {
        let (p, _) = parse_config("T = 2.5\nl = 42\n").unwrap();
        let (p2, _) = parse_config(&to_config(&p)).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn sweep_section_parses() {
        let text = "T = 0.1\n[sweep]\naxis = \"temperature\"\nmin = 0.001\nmax = 10.0\npoints = 5\n";
        let (_, sweep) = parse_config(text).unwrap();
        let sweep = sweep.unwrap();
        assert_eq!(sweep.axis, SweepAxis::Temperature);
        assert_eq!(sweep.values.len(), 5);
        assert_relative_eq!(sweep.values[4], 10.0);
    }

    #[test]
    fn single_point_sweep_equals_point_pipeline() {
        let base = ParameterSet::default();
        let spec = SweepSpec::from_range(SweepAxis::Temperature, base, 2.0, 2.0, 1).unwrap();
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 1);
        let mut p = base;
        p.temperature = 2.0;
        let ev = evaluate_point(&p, false).unwrap();
        assert_eq!(
            result.rows[0].log_negativity.unwrap(),
            ev.report.unwrap().log_negativity
        );
    }

    #[test]
    fn parallel_matches_serial() {
        let base = ParameterSet::default();
        let spec = SweepSpec::from_range(SweepAxis::Temperature, base, 0.001, 50.0, 8).unwrap();
        let par = run_sweep(&spec).unwrap();
        let ser: Vec<SweepRow> = spec
            .values
            .iter()
            .map(|&v| {
                let p = spec.axis.apply(&spec.base, v);
                row_for(v, evaluate_point_unchecked(&p, false))
            })
            .collect();
        for (a, b) in par.rows.iter().zip(ser.iter()) {
            assert_eq!(a.log_negativity, b.log_negativity);
            assert_eq!(a.axis_value, b.axis_value);
        }
    }

    #[test]
    fn synthetic_threshold() {
        let rows: Vec<SweepRow> = (0..11)
            .map(|i| {
                let x = i as f64;
                let mut r = row_for(x, Err(Error::Config(String::new())));
                r.log_negativity = Some((x - 5.0).max(0.0));
                r
            })
            .collect();
        let t = find_threshold_with(&rows, |x| x > 5.0).unwrap();
        assert_relative_eq!(t, 5.0, max_relative = 1e-5);
    }

    #[test]
    fn all_positive_rows_have_no_threshold() {
        let rows: Vec<SweepRow> = (0..5)
            .map(|i| {
                let mut r = row_for(i as f64, Err(Error::Config(String::new())));
                r.log_negativity = Some(1.0);
                r
            })
            .collect();
        assert!(find_threshold_with(&rows, |_| true).is_none());
    }

    #[test]
    fn csv_is_deterministic_and_shaped() {
        let base = ParameterSet::default();
        let spec = SweepSpec::from_range(SweepAxis::Temperature, base, 0.001, 1.0, 2).unwrap();
        let result = run_sweep(&spec).unwrap();
        let a = to_csv(&result);
        let b = to_csv(&result);
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("axis_value,a_s,G,stable,"));
    }

    #[test]
    fn unstable_rows_leave_entanglement_absent() {
        // drive hard into the unstable regime
        let mut base = ParameterSet::default();
        base.power = 500.0;
        base.quality = 1e9;
        let spec = SweepSpec::from_range(SweepAxis::Temperature, base, 1.0, 1.0, 1).unwrap();
        let result = run_sweep(&spec).unwrap();
        let row = &result.rows[0];
        if row.stable == Some(false) {
            assert!(row.log_negativity.is_none());
        }
    }

    #[test]
    fn bistability_diagnostic_available() {
        use crate::steadystate::bistability_roots;
        // exercised here to keep the CLI surface honest
        let p = ParameterSet::default();
        let d = derive_quantities(&p, &CONSTANTS);
        let ss = steady_state(&p, &d).unwrap();
        let roots = bistability_roots(&p, &d, ss.delta_bare);
        assert!(matches!(roots.len(), 1 | 3));
    }
}
