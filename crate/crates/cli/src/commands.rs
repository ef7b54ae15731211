use std::fmt::Write as _;
use std::path::Path;

use dgint::chart_format::parse_dg_spec;
use dgint::config::RunConfig;
use dgint::fixtures::bundled_with;
use dgint::form::PolyForm;
use dgint::graded::ChartedDgManifold;
use dgint::groupoid::{gauge_flow_retract, multiply, GroupoidElement};
use dgint::lie::LieAlgebra;
use dgint::mc;
use dgint::random;
use dgint::report::{join_nums, num, selftest, verdict, Report};
use dgint::simplicial::horn_fill_big;
use dgint::symplectic::{delta_omega_s, grassmann_pairings, nondegeneracy_check, omega_s_matrix};
use dgint::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Command;

pub fn name(c: &Command) -> &'static str {
    match c {
        Command::CheckQ2 { .. } => "check-q2",
        Command::McSolve { .. } => "mc-solve",
        Command::HornFill { .. } => "horn-fill",
        Command::Multiply { .. } => "multiply",
        Command::GroupoidTable { .. } => "groupoid-table",
        Command::Retract { .. } => "retract",
        Command::SymplecticReport { .. } => "symplectic-report",
        Command::Selftest => "selftest",
    }
}

pub fn chart(c: &Command) -> Option<&str> {
    match c {
        Command::CheckQ2 { chart }
        | Command::McSolve { chart, .. }
        | Command::HornFill { chart, .. }
        | Command::Multiply { chart, .. }
        | Command::GroupoidTable { chart, .. }
        | Command::Retract { chart, .. }
        | Command::SymplecticReport { chart, .. } => Some(chart),
        Command::Selftest => None,
    }
}

/// A chart file on disk, or else a bundled chart of that name.
fn load_chart(spec: &str, allow_unchecked: bool) -> Result<ChartedDgManifold> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
        parse_dg_spec(&text, label, allow_unchecked)
    } else {
        bundled_with(spec, allow_unchecked)
    }
}

fn read_form(dg: &ChartedDgManifold, path: &Path) -> Result<PolyForm<f64>> {
    let text = std::fs::read_to_string(path)?;
    PolyForm::from_table(&text, &dg.names(), dg.wdeg())
}

fn write_form(dg: &ChartedDgManifold, path: Option<&Path>, f: &PolyForm<f64>) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, f.to_table(&dg.names()))?;
    }
    Ok(())
}

/// Round to 12 decimals so that e.g. 0.005 prints as `0.005`.
fn short(v: f64) -> String {
    let r = (v * 1e12).round() / 1e12;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

fn shorts(xs: &[f64]) -> String {
    xs.iter().map(|&x| short(x)).collect::<Vec<_>>().join(",")
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Degree-0 values at vertex 1 of an arrow.
fn target(dg: &ChartedDgManifold, g: &GroupoidElement) -> Vec<f64> {
    let v = g.form.vertex_values(1);
    dg.coords().zero_coords().iter().map(|&i| v[i]).collect()
}

fn header(r: &mut Report, cfg: &RunConfig, dg: &ChartedDgManifold) {
    r.kv("command", &cfg.command);
    r.kv("chart", &dg.label);
    r.kv("cap", cfg.cap);
    r.kv("seed", cfg.seed);
}

pub fn run(c: &Command, cfg: &RunConfig) -> Result<Report> {
    let mut r = Report::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tol = &cfg.tol;
    match c {
        Command::CheckQ2 { chart } => {
            let dg = load_chart(chart, true)?;
            header(&mut r, cfg, &dg);
            let res = dg.check_q2();
            for (k, p) in res.iter().enumerate() {
                if !p.is_zero() {
                    r.kv(format!("residual.{}", dg.coords().name(k)), p);
                }
            }
            let ok = res.iter().all(|p| p.is_zero());
            r.kv("Q^2", format!("0: {}", verdict(ok)));
            r.check("result", ok);
        }
        Command::McSolve {
            chart,
            closed,
            n,
            amp,
            vertex,
            form_out,
        } => {
            let dg = load_chart(chart, false)?;
            header(&mut r, cfg, &dg);
            let b = match closed {
                Some(p) => read_form(&dg, p)?,
                None => random::small_closed(&mut rng, &dg.wdeg(), *n, cfg.cap, *amp),
            };
            let v = vertex.unwrap_or(0);
            let sol = mc::kuranishi_inverse_at(&dg, &b, v, tol)?;
            let back = mc::kuranishi_at(&dg, &sol.form, v)?.sub(&b).max_coeff();
            r.kv("n", b.dim());
            r.kv("vertex", v);
            r.kv("iterations", sol.iterations);
            r.kv("converged", sol.converged);
            r.kv("truncated", sol.truncated());
            r.num("mc_residual", sol.residual_norm);
            r.num("round_trip", back);
            r.check("result", sol.converged && sol.residual_norm <= tol.mc_tol);
            r.csv("solution", sol.form.to_table(&dg.names()));
            write_form(&dg, form_out.as_deref(), &sol.form)?;
        }
        Command::HornFill {
            chart,
            k,
            faces,
            form_out,
        } => {
            let dg = load_chart(chart, false)?;
            header(&mut r, cfg, &dg);
            let mut given = faces
                .iter()
                .map(|p| read_form(&dg, p).map(Some))
                .collect::<Result<Vec<_>>>()?;
            if *k > given.len() {
                return Err(Error::IncompatibleHorn(format!(
                    "horn index {k} exceeds simplex dimension {}",
                    given.len()
                )));
            }
            given.insert(*k, None);
            let fill = horn_fill_big(&dg, &given, *k, tol)?;
            r.kv("n", given.len() - 1);
            r.kv("k", k);
            r.kv("iterations", fill.solution.iterations);
            r.num("face_error", fill.face_error);
            r.num("mc_residual", fill.solution.residual_norm);
            r.check(
                "result",
                fill.face_error <= tol.mc_tol && fill.solution.residual_norm <= tol.mc_tol,
            );
            r.csv("filler", fill.solution.form.to_table(&dg.names()));
            write_form(&dg, form_out.as_deref(), &fill.solution.form)?;
        }
        Command::Multiply { chart, a, b, x0 } => {
            let dg = load_chart(chart, false)?;
            header(&mut r, cfg, &dg);
            // b runs from x0 to x1, a from x1 on
            let gb = GroupoidElement::edge(&dg, x0, b, cfg.cap, tol)?;
            let ga = GroupoidElement::edge(&dg, &target(&dg, &gb), a, cfg.cap, tol)?;
            let p = multiply(&dg, &ga, &gb, cfg.cap, tol)?;
            let pv = p.edge_values();
            r.kv("a", shorts(a));
            r.kv("b", shorts(b));
            r.kv("product", shorts(&pv));
            r.num("mc_residual", p.mc_residual_norm);
            r.num("curvature", p.curvature_norm);
            if let Some(lie) = LieAlgebra::from_chart(&dg) {
                let want = lie.bch(a, b);
                r.kv("bch_oracle", shorts(&want));
                r.num("deviation", max_diff(&pv, &want));
            }
            r.check("result", p.accepted(tol));
        }
        Command::GroupoidTable {
            chart,
            grid,
            radius,
        } => {
            let dg = load_chart(chart, false)?;
            header(&mut r, cfg, &dg);
            let x0 = dg.bounds().center();
            let d = (0..dg.rank())
                .filter(|&i| dg.coords().degree(i) == 1)
                .count();
            let lie = LieAlgebra::from_chart(&dg);
            // fixed directions, scaled so the largest entry is 1
            let dir = |f: fn(f64) -> f64| -> Vec<f64> {
                let v: Vec<f64> = (0..d).map(|j| f(j as f64 + 1.0)).collect();
                let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
                v.iter().map(|x| x / m).collect()
            };
            let (u, w) = (dir(f64::cos), dir(f64::sin));
            let steps: Vec<f64> = if *grid < 2 {
                vec![*radius]
            } else {
                (0..*grid)
                    .map(|i| -radius + 2.0 * radius * i as f64 / (*grid - 1) as f64)
                    .collect()
            };
            let mut csv = String::new();
            let cols = |p: &str| {
                (0..d)
                    .map(|j| format!("{p}{j}"))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let _ = write!(
                csv,
                "{},{},{},residual",
                cols("a"),
                cols("b"),
                cols("product")
            );
            if lie.is_some() {
                let _ = write!(csv, ",{},deviation", cols("oracle"));
            }
            csv.push('\n');
            let (mut worst_dev, mut worst_res): (f64, f64) = (0.0, 0.0);
            for &s in &steps {
                for &t in &steps {
                    let a: Vec<f64> = u.iter().map(|x| x * s).collect();
                    let b: Vec<f64> = w.iter().map(|x| x * t).collect();
                    let gb = GroupoidElement::edge(&dg, &x0, &b, cfg.cap, tol)?;
                    let ga = GroupoidElement::edge(&dg, &target(&dg, &gb), &a, cfg.cap, tol)?;
                    let p = multiply(&dg, &ga, &gb, cfg.cap, tol)?;
                    let pv = p.edge_values();
                    worst_res = worst_res.max(p.mc_residual_norm);
                    let _ = write!(
                        csv,
                        "{},{},{},{}",
                        join_nums(&a),
                        join_nums(&b),
                        join_nums(&pv),
                        num(p.mc_residual_norm)
                    );
                    if let Some(l) = &lie {
                        let o = l.bch(&a, &b);
                        let dev = max_diff(&pv, &o);
                        worst_dev = worst_dev.max(dev);
                        let _ = write!(csv, ",{},{}", join_nums(&o), num(dev));
                    }
                    csv.push('\n');
                }
            }
            r.kv("grid", steps.len());
            r.num("radius", *radius);
            r.num("max_residual", worst_res);
            if lie.is_some() {
                r.num("max_deviation", worst_dev);
            }
            r.check("result", worst_res <= tol.mc_tol);
            r.csv("products", csv);
        }
        Command::Retract {
            chart,
            form,
            n,
            amp,
            tau,
            form_out,
        } => {
            let dg = load_chart(chart, false)?;
            header(&mut r, cfg, &dg);
            let a = match form {
                Some(p) => read_form(&dg, p)?,
                None => {
                    let b = random::small_closed(&mut rng, &dg.wdeg(), *n, cfg.cap, *amp);
                    mc::kuranishi_inverse(&dg, &b, tol)?.form
                }
            };
            let ret = gauge_flow_retract(&dg, &a, *tau, cfg.rk4_steps, tol)?;
            let monotone = ret.defects.windows(2).all(|w| w[1] <= w[0]);
            r.kv("n", a.dim());
            r.num("tau", *tau);
            r.num("initial_defect", ret.defects[0]);
            r.num("final_defect", *ret.defects.last().unwrap_or(&0.0));
            r.kv("monotone", monotone);
            if let Some(p) = &ret.polish {
                r.kv("polish_iterations", p.iterations);
                r.num("polish_residual", p.residual);
            }
            r.num("mc_residual", ret.element.mc_residual_norm);
            r.num("gauge_defect", ret.element.gauge_defect_norm);
            r.kv("cochain", join_nums(&ret.element.cochain.flat()));
            r.check("result", monotone && ret.element.accepted(tol));
            let mut csv = String::from("time,defect\n");
            for (t, d) in ret.times.iter().zip(&ret.defects) {
                let _ = writeln!(csv, "{},{}", num(*t), num(*d));
            }
            r.csv("defects", csv);
            write_form(&dg, form_out.as_deref(), &ret.element.form)?;
        }
        Command::SymplecticReport { chart, x0 } => {
            let dg = load_chart(chart, false)?;
            header(&mut r, cfg, &dg);
            let om = dg.omega().ok_or_else(|| {
                Error::InvalidChart(format!("chart {} has no [omega] section", dg.label))
            })?;
            let k = om.k;
            let x = if x0.is_empty() {
                dg.bounds().center()
            } else {
                x0.clone()
            };
            r.kv("k", k);
            r.kv("x0", shorts(&x));
            let g = GroupoidElement::constant(&dg, &x, k, cfg.cap, tol)?;
            let oms = omega_s_matrix(&dg, &g, tol)?;
            r.kv("omega_s.tangent_dim", oms.tangent_dim);
            r.kv("omega_s.rank", oms.rank);
            r.num("omega_s.antisymmetry", oms.antisymmetry);
            let nd = nondegeneracy_check(&dg, &x, k)?;
            r.kv("exact.closed_dim", nd.closed_dim);
            r.kv("exact.rank", nd.rank);
            r.kv("exact.kernel_law", nd.kernel_law);
            let cross = nd.closed_dim == oms.tangent_dim && nd.rank == oms.rank;
            r.check("cross_check", cross);
            let mut tables = true;
            for m in 1..=k + 1 {
                let t = grassmann_pairings(m);
                let mis = t.mismatches().len();
                r.kv(format!("grassmann.n{m}.mismatches"), mis);
                tables &= mis == 0 && t.kernel_law();
            }
            r.check("grassmann", tables);
            let b = random::small_closed(&mut rng, &dg.wdeg(), k + 1, cfg.cap, 0.02);
            let a = mc::kuranishi_inverse(&dg, &b, tol)?;
            let top = gauge_flow_retract(&dg, &a.form, 20.0, cfg.rk4_steps, tol)?.element;
            let dws = delta_omega_s(&dg, &top, tol)?;
            r.num("delta_omega_s", dws);
            let ok = cross
                && tables
                && nd.nondegenerate()
                && nd.kernel_law
                && oms.rank == oms.tangent_dim
                && dws <= 1e-6;
            r.check("result", ok);
            let mut csv = String::new();
            for i in 0..oms.matrix.nrows() {
                let row: Vec<f64> = oms.matrix.row(i).iter().copied().collect();
                let _ = writeln!(csv, "{}", join_nums(&row));
            }
            r.csv("omega_s", csv);
        }
        Command::Selftest => {
            r = selftest(cfg.seed, cfg);
        }
    }
    Ok(r)
}
