//! One PASS/FAIL line per acceptance criterion. Exits non-zero when any is red.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use flyq::model::{ClampReason, ControlSchedule, PhaseSpec, TaskKind, TaskSpec};
use flyq::numerics::{TimeGrid, C64};
use flyq::simulator::{simulate_task, SimulationReport};
use flyq::synthesis::*;
use flyq::Error;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rayon::prelude::*;

const N: usize = 4001;
const SAME: (f64, f64) = (-0.75, 0.75);
const DELAYED: (f64, f64) = (-0.75, 0.95);
const EXPO: (f64, f64) = (0.0, 1.5);

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: String) -> Line {
    Line { pass, detail }
}

fn unclamped(s: &ControlSchedule, channel: usize, t: f64) -> bool {
    !s.clamp_report().iter().any(|r| {
        r.channel == channel && r.reason != ClampReason::TruncatedWindow && t >= r.t_from_us && t <= r.t_to_us
    })
}

fn v_alphas() -> [(&'static str, [C64; 2]); 3] {
    [("v_catch_10", [c(1.0, 0.0), c(0.0, 0.0)]), ("v_catch_01", [c(0.0, 0.0), c(1.0, 0.0)]), ("v_catch_half", [half(), half()])]
}

/// Every acceptance task on an `n`-point grid.
fn tasks(n: usize) -> Vec<(&'static str, TaskSpec)> {
    use TaskKind::*;
    let g = |w: (f64, f64)| grid(w.0, w.1, n);
    let (ge, gs, gd) = (g(EXPO), g(SAME), g(DELAYED));
    let mut out = vec![
        ("lambda_generate_exponential", TaskSpec::new(LambdaGenerate, vec![expo(&ge, 15.0), expo(&ge, 5.0)], Some([half(), half()]))),
        ("lambda_generate_gaussian", TaskSpec::new(LambdaGenerate, vec![gauss(&gs, 2.0, 0.0), gauss(&gs, 4.0, 0.0)], Some([half(), half()]))),
        ("xi_pair_delayed", TaskSpec::new(XiPair, vec![gauss(&gd, 2.0, 0.0), gauss(&gd, 2.0, 0.2)], None)),
        ("lambda_convert_delayed", TaskSpec::new(LambdaConvert, vec![gauss(&gd, 2.0, 0.0), gauss_pi(&gd, 2.0, 0.2)], None)),
        ("two_level_generate_exponential", TaskSpec::new(TwoLevelGenerate, vec![expo(&ge, 15.0)], None)),
        ("two_level_catch_exponential", TaskSpec::new(TwoLevelCatch, vec![expo(&ge, 15.0)], None)),
        ("two_level_generate_gaussian", TaskSpec::new(TwoLevelGenerate, vec![gauss(&gs, 2.0, 0.0)], None)),
        ("two_level_catch_gaussian", TaskSpec::new(TwoLevelCatch, vec![gauss(&gs, 2.0, 0.0)], None)),
    ];
    for (name, a) in v_alphas() {
        out.push((name, TaskSpec::new(VCatch, vec![gauss(&gs, 2.0, 0.0), gauss(&gs, 4.0, 0.0)], Some(a))));
    }
    out.into_iter().map(|(k, s)| (k, s.unwrap())).collect()
}

fn run_all(n: usize) -> BTreeMap<&'static str, SimulationReport> {
    tasks(n)
        .into_par_iter()
        .map(|(k, s)| (k, simulate_task(&s).unwrap_or_else(|e| panic!("{k}: {e}"))))
        .collect()
}

fn max_rel(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs.map(|(a, b)| rel_err(a, b)).fold(0.0, f64::max)
}

fn criterion1() -> Line {
    let start = Instant::now();
    let g = grid(EXPO.0, EXPO.1, N);
    let (x1, x2) = (expo(&g, 15.0), expo(&g, 5.0));
    let s = synth_lambda_generate(half(), half(), &x1, &x2).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let (g1, g2) = (TWO_PI * 15.0, TWO_PI * 5.0);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (i, t) in g.times().into_iter().enumerate() {
        for (j, (a, b)) in [(g1, g2), (g2, g1)].into_iter().enumerate() {
            if unclamped(&s, j + 1, t) {
                worst = worst.max(rel_err(s.gamma(j)[i], a / (1.0 + ((a - b) * t).exp())));
                checked += 1;
            }
        }
    }
    line(
        worst <= 1e-9 && elapsed < 1.0 && checked > 0,
        format!("exponential closed form max rel err {worst:.2e} over {checked} samples, runtime {elapsed:.3} s"),
    )
}

/// Relative gap between rate `a.1` of `a.0` and `b` over the first or last
/// tenth of their joint support (samples where both are unclamped and positive).
fn asymptote_gap(g: &TimeGrid, a: (&ControlSchedule, usize), b: &ControlSchedule, late: bool) -> (f64, usize) {
    let support: Vec<(f64, f64, f64)> = g
        .times()
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let (x, y) = (a.0.gamma(a.1)[i], b.gamma(0)[i]);
            let ok = unclamped(a.0, a.1 + 1, t) && unclamped(b, 1, t) && x > 0.0 && y > 0.0;
            ok.then_some((t, x, y))
        })
        .collect();
    let (Some(first), Some(last)) = (support.first(), support.last()) else {
        return (f64::INFINITY, 0);
    };
    let tenth = 0.1 * (last.0 - first.0);
    let inside: Vec<_> = support
        .iter()
        .filter(|p| if late { p.0 >= last.0 - tenth } else { p.0 <= first.0 + tenth })
        .collect();
    (max_rel(inside.iter().map(|p| (p.1, p.2))), inside.len())
}

fn criterion2(r: &SimulationReport) -> Line {
    let g = grid(SAME.0, SAME.1, N);
    let x1 = gauss(&g, 2.0, 0.0);
    let s = synth_lambda_generate(half(), half(), &x1, &gauss(&g, 4.0, 0.0)).unwrap();
    let two = synth_two_level_generate(&x1).unwrap();
    let (gap, n) = asymptote_gap(&g, (&s, 0), &two, true);
    let f = r.fidelities["branch1"].min(r.fidelities["branch2"]);
    let p = ["single_ch1_g", "single_ch2_e"].map(|k| (r.probabilities[k] - 0.5).abs());
    let cons = r.conservation.max_residual;
    let pass = f >= 0.999 && p[0] <= 1e-3 && p[1] <= 1e-3 && cons <= 1e-6 && gap < 1e-2 && n > 0;
    line(
        pass,
        format!(
            "min branch fidelity {f:.6}, |p - 0.5| {:.1e}/{:.1e}, conservation {cons:.1e}, late gamma1 rel gap {gap:.1e} ({n} samples)",
            p[0], p[1]
        ),
    )
}

fn criterion3(r: &SimulationReport) -> Line {
    let g = grid(SAME.0, SAME.1, N);
    let first = match synth_xi_pair(&gauss(&g, 2.0, 0.0), &gauss(&g, 4.0, 0.0)) {
        Err(Error::NotRealizable(rep)) => rep.first_violation_us,
        _ => None,
    };
    let at_peak = first.is_some_and(|t| t.abs() <= g.dt());
    let l1 = r.marginal_l1.unwrap_or([f64::INFINITY; 2]);
    line(
        at_peak && l1[0] <= 1e-3 && l1[1] <= 1e-3,
        format!("same-center first violation at {first:?} us, delayed marginal L1 {:.1e}/{:.1e}", l1[0], l1[1]),
    )
}

fn criterion4(r: &SimulationReport) -> Line {
    let g = grid(DELAYED.0, DELAYED.1, N);
    let (x1, x2) = (gauss(&g, 2.0, 0.0), gauss_pi(&g, 2.0, 0.2));
    let s = synth_lambda_convert(&x1, &x2).unwrap();
    let (early, ne) = asymptote_gap(&g, (&s, 0), &synth_two_level_catch(&x1).unwrap(), false);
    let (late, nl) = asymptote_gap(&g, (&s, 1), &synth_two_level_generate(&x2).unwrap(), true);
    let (leak, f) = (r.leakage["channel1"], r.fidelities["channel2"]);
    line(
        leak <= 1e-3 && f >= 0.999 && early < 1e-2 && late < 1e-2 && ne > 0 && nl > 0,
        format!("channel-1 leakage {leak:.1e}, channel-2 fidelity {f:.6}, early gamma1 gap {early:.1e}, late gamma2 gap {late:.1e}"),
    )
}

fn criterion5() -> Line {
    let mut runner = TestRunner::deterministic();
    let chirp = (0.5f64..20.0, proptest::bool::ANY).prop_map(|(c, neg)| if neg { -c } else { c });
    let case = (chirp.clone(), chirp, 1.5f64..2.5, 0.15f64..0.25);
    let (mut rejected, mut cases) = (0, 0);
    for _ in 0..20 {
        let (c1, dc, w, tp) = case.new_tree(&mut runner).unwrap().current();
        let ph = |c| PhaseSpec { global_pi: false, chirp_rad_per_us: c };
        let gd = grid(DELAYED.0, DELAYED.1, 801);
        let conv = synth_lambda_convert(&gauss_phase(&gd, w, 0.0, ph(c1)), &gauss_phase(&gd, w, tp, ph(c1)));
        let gs = grid(SAME.0, SAME.1, 801);
        let gen = synth_lambda_generate(
            half(),
            half(),
            &gauss_phase(&gs, w, 0.0, ph(c1)),
            &gauss_phase(&gs, 2.0 * w, 0.0, ph(c1 + dc)),
        );
        rejected += matches!(conv, Err(Error::PhaseMismatch(_))) as usize;
        rejected += matches!(gen, Err(Error::PhaseMismatch(_))) as usize;
        cases += 2;
    }
    line(rejected == cases, format!("{rejected}/{cases} chirped cases rejected with PhaseMismatch"))
}

fn over(items: impl Iterator<Item = (String, f64)>, tol: f64) -> String {
    let bad: Vec<String> = items.filter(|(_, v)| *v > tol).map(|(k, v)| format!("{k} {v:.1e}")).collect();
    if bad.is_empty() {
        "none".into()
    } else {
        bad.join(", ")
    }
}

fn criterion6(reports: &BTreeMap<&str, SimulationReport>) -> Line {
    let gaps = || reports.iter().map(|(k, r)| (k.to_string(), r.population_rule_gap));
    let worst = gaps().map(|g| g.1).fold(0.0, f64::max);
    line(
        worst <= 2e-3,
        format!("max denominator/population gap {worst:.1e} over {} tasks, above 2e-3: {}", reports.len(), over(gaps(), 2e-3)),
    )
}

fn criterion7(reports: &BTreeMap<&str, SimulationReport>) -> Line {
    let keys = ["lambda_generate_exponential", "lambda_generate_gaussian", "xi_pair_delayed", "lambda_convert_delayed"];
    let res: Vec<f64> = keys.iter().map(|k| reports[k].oracle_residual.unwrap_or(f64::INFINITY)).collect();
    let form = reports["lambda_convert_delayed"]
        .conservation
        .internal
        .as_ref()
        .map_or(f64::INFINITY, |c| c.max_form_gap);
    let worst = res.iter().copied().fold(0.0, f64::max);
    line(
        worst <= 1e-6 && form <= 1e-6,
        format!("oracle sup-norm gaps {}, converter identity gap {form:.1e}", res.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>().join("/")),
    )
}

fn criterion8(reports: &BTreeMap<&str, SimulationReport>) -> Line {
    let mut parts = Vec::new();
    let mut pass = true;
    for shape in ["exponential", "gaussian"] {
        let gen = reports[format!("two_level_generate_{shape}").as_str()].fidelities["channel1"];
        let caught = reports[format!("two_level_catch_{shape}").as_str()].fidelities["absorbed"];
        pass &= gen >= 0.999 && caught >= 0.999;
        parts.push(format!("{shape} generate {gen:.6} catch {caught:.6}"));
    }
    for (k, _) in v_alphas() {
        let f = reports[k].fidelities["state"];
        pass &= f >= 0.999;
        parts.push(format!("{k} {f:.6}"));
    }
    line(pass, parts.join(", "))
}

fn run_cli(args: &[&str], out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_flyq")).args(args).arg("--out").arg(out).status().unwrap();
    assert!(status.code().is_some_and(|c| c == 0 || c == 3), "flyq {args:?}: {status}");
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn criterion9(coarse: &BTreeMap<&str, SimulationReport>, fine: &BTreeMap<&str, SimulationReport>) -> Line {
    let changes: Vec<(String, f64)> = coarse
        .iter()
        .flat_map(|(k, r)| r.fidelities.iter().map(move |(name, f)| (format!("{k}/{name}"), (f - fine[k].fidelities[name]).abs())))
        .collect();
    let worst = changes.iter().map(|c| c.1).fold(0.0, f64::max);
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig10b.json");
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            run_cli(&["verify", "--config", config], dir.path());
            run_cli(&["figure", "fig6"], dir.path());
            dir_bytes(dir.path())
        })
        .collect();
    let identical = runs[0] == runs[1] && !runs[0].is_empty();
    line(
        worst < 1e-4 && identical,
        format!(
            "max fidelity change under grid doubling {worst:.1e}, above 1e-4: {}, CLI outputs byte-identical: {identical}",
            over(changes.into_iter(), 1e-4)
        ),
    )
}

fn main() {
    let coarse = run_all(N);
    let fine = run_all(2 * N - 1);
    let c = &coarse;
    let lines = [
        criterion1(),
        criterion2(&c["lambda_generate_gaussian"]),
        criterion3(&c["xi_pair_delayed"]),
        criterion4(&c["lambda_convert_delayed"]),
        criterion5(),
        criterion6(c),
        criterion7(c),
        criterion8(c),
        criterion9(c, &fine),
    ];
    for (i, l) in lines.iter().enumerate() {
        println!("criterion {}: {} {}", i + 1, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let red = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} passed, {red} failed", lines.len() - red);
    if red > 0 {
        std::process::exit(1);
    }
}
