use std::collections::BTreeMap;
use std::f64::consts::TAU;

use prerand_core::acceptance::{self, CRITERIA};
use prerand_core::causality::{classify_ladder, LadderOptions};
use prerand_core::distance::{
    build_graph, distances_to, pre_distance, DiscreteGeometry, PreDistanceResult, Sources, Stencil,
};
use prerand_core::fields::{Curve, OneFormField, Point, ScalarField, SymTensorField, Vector};
use prerand_core::geodesic::{h_unit, integrate_pregeodesic, lift_lightlike, periodic_search, shoot_connect, GeodesicProblem, PeriodicOptions, ShootingOptions};
use prerand_core::harris::harris_classify;
use prerand_core::horizon::{cut_locus, refinement_table, TargetSpec};
use prerand_core::magnetic::{el_residuals, integrate_magnetic, magnetic_connect, magnetic_periodic, MagneticOptions};
use prerand_core::metrics::{riemannianize, som_from_pre_randers, SOMSpacetime};
use prerand_core::scenario::{builtin_names, builtin_source, FieldSrc, KillingConfig, MetricSource, PreRandersConfig, Resolved, Scenario, SomConfig};

use crate::args::{parse_pair, parse_triple, Cli, Command, Common, TaskArgs};
use crate::error::{invalid, numeric, CliError};
use crate::output::{num, Report};

const IVP_STEPS: usize = 4096;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Convert { common, into } => convert(&common, into.as_deref()),
        Command::Distance { common, task, all, radius } => distance(&common, &task, all, radius),
        Command::Geodesic { common, task, dir } => geodesic(&common, &task, dir),
        Command::Classify { common, horizon, from } => classify(&common, horizon.as_deref(), from),
        Command::Weight { common } => weight(&common),
        Command::Cutlocus { common, target, levels, table } => cutlocus(&common, target, levels, table.as_deref()),
        Command::Magnetic { common, task, b, energy, dir } => magnetic(&common, &task, b, energy, dir),
        Command::Selftest { criterion } => selftest(criterion),
    }
}

/// Reads the scenario, applies flag overrides and resolves the metric.
fn load(common: &Common, edit: impl FnOnce(&mut Scenario) -> Result<(), CliError>) -> Result<Resolved, CliError> {
    let (src, origin) = match (&common.config, &common.builtin) {
        (Some(p), _) => (std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?, p.display().to_string()),
        (None, Some(name)) => {
            let src = builtin_source(name).ok_or_else(|| {
                invalid(format!("unknown built-in `{name}`; available: {}", builtin_names().collect::<Vec<_>>().join(", ")))
            })?;
            (src.to_string(), name.clone())
        }
        (None, None) => return Err(invalid("one of --config or --builtin is required")),
    };
    let mut sc = Scenario::parse(&src).map_err(|e| invalid(format!("{origin}: {e}")))?;
    let nm = &mut sc.numerics;
    if let Some(n) = common.n {
        nm.n = n;
    }
    if let Some(s) = common.stencil {
        nm.stencil = Stencil::try_from(s).map_err(invalid)?;
    }
    if let Some(s) = common.seed {
        nm.seed = s;
    }
    if let Some(w) = common.w_max {
        nm.w_max = w;
    }
    if let Some(e) = common.eps_shoot_rel {
        nm.eps_shoot_rel = e;
    }
    if let Some(b) = common.convexity_budget {
        nm.convexity_budget = b;
    }
    edit(&mut sc)?;
    Scenario::parse(&sc.to_toml()).map_err(|e| invalid(format!("flags: {}", e.message)))?;
    sc.resolve(&src).map_err(|e| invalid(format!("{origin}: {e}")))
}

/// Task flags override the scenario; a mode flag clears the other modes.
fn apply_task(sc: &mut Scenario, task: &TaskArgs, dir: Option<[f64; 2]>) {
    let t = &mut sc.task;
    if task.from.is_some() {
        t.from = task.from;
    }
    let heading = dir.map(|d| d[1].atan2(d[0])).or(task.heading);
    if task.to.is_some() || task.periodic.is_some() || heading.is_some() {
        t.to = task.to;
        t.winding = task.periodic;
        t.heading = heading;
    }
    if task.span.is_some() {
        t.span = task.span;
    }
}

fn point(r: &Resolved, p: Option<[f64; 2]>, what: &str) -> Result<Point, CliError> {
    let p = p.ok_or_else(|| invalid(format!("--{what} is required (or set task.{what} in the scenario)")))?;
    let x = Point::new(p[0], p[1]);
    let chart = r.metric.chart();
    if !chart.contains(&chart.wrap(&x)) {
        return Err(invalid(format!("--{what} {},{} lies outside the chart", p[0], p[1])));
    }
    Ok(x)
}

fn graph(r: &Resolved) -> Result<DiscreteGeometry, CliError> {
    Ok(build_graph(&r.metric, r.scenario.numerics.n, r.scenario.numerics.stencil)?)
}

fn shooting(r: &Resolved) -> ShootingOptions {
    let nm = &r.scenario.numerics;
    ShootingOptions { eps_shoot_rel: nm.eps_shoot_rel, w_max: nm.w_max, ..Default::default() }
}

fn periodic_opts(r: &Resolved) -> PeriodicOptions {
    PeriodicOptions { vertices: r.scenario.numerics.periodic_vertices, ..Default::default() }
}

fn coords(g: &DiscreteGeometry, i: usize) -> Vec<String> {
    let (a, b) = g.grid().coords(i);
    let p = g.grid().point(i);
    vec![a.to_string(), b.to_string(), num(p[0]), num(p[1])]
}

fn scalar_src(f: &ScalarField) -> Result<FieldSrc, CliError> {
    if let Some(c) = f.as_constant() {
        return Ok(FieldSrc::Number(c));
    }
    if let Some(e) = f.expr().filter(|e| !e.depends_on(0) && !e.depends_on(1)) {
        return Ok(FieldSrc::Number(e.eval(0.0, 0.0)));
    }
    ScalarField::parse(f.label(), &BTreeMap::new())
        .map(|_| FieldSrc::Text(f.label().to_string()))
        .map_err(|_| invalid(format!("field `{}` has no closed form; give it explicitly in the scenario", f.label())))
}

fn form_src(w: &OneFormField) -> Result<[FieldSrc; 2], CliError> {
    Ok([scalar_src(&w.comps[0])?, scalar_src(&w.comps[1])?])
}

fn tensor_src(t: &SymTensorField) -> Result<[FieldSrc; 3], CliError> {
    Ok([scalar_src(&t.xx)?, scalar_src(&t.xy)?, scalar_src(&t.yy)?])
}

fn convert(common: &Common, into: Option<&str>) -> Result<(), CliError> {
    let r = load(common, |_| Ok(()))?;
    let (from, default) = match &r.source {
        MetricSource::PreRanders => ("pre_randers", "som"),
        MetricSource::Som(_) => ("som", "pre_randers"),
        MetricSource::KillingSubmersion(..) => ("killing_submersion", "som"),
        MetricSource::Magnetic(..) => ("magnetic", "pre_randers"),
    };
    let into = into.unwrap_or(default);
    let som = || -> SOMSpacetime {
        match &r.source {
            MetricSource::Som(s) | MetricSource::KillingSubmersion(_, s) => s.clone(),
            _ => som_from_pre_randers(&r.metric),
        }
    };
    let mut out = r.scenario.clone();
    out.pre_randers = None;
    out.som = None;
    out.killing_submersion = None;
    out.magnetic = None;
    match into {
        "pre_randers" => out.pre_randers = Some(PreRandersConfig { h: tensor_src(r.metric.h())?, omega: form_src(r.metric.omega())? }),
        "som" => {
            let s = som();
            out.som = Some(SomConfig { beta: scalar_src(&s.beta)?, omega: form_src(&s.omega)?, g0: tensor_src(&s.g0)? });
        }
        "killing_submersion" => {
            let k = riemannianize(&som()).map_err(invalid)?;
            out.killing_submersion =
                Some(KillingConfig { beta_bar: scalar_src(&k.beta_bar)?, omega_bar: form_src(&k.omega_bar)?, g0_bar: tensor_src(&k.g0_bar)? });
        }
        other => return Err(invalid(format!("--into must be pre_randers, som or killing_submersion, got `{other}`"))),
    }
    let mut rep = Report::default();
    rep.comment(format!("converted from [{from}] to [{into}]"));
    rep.line(out.to_toml());
    rep.write(common.out.as_deref())
}

fn distance(common: &Common, task: &TaskArgs, all: bool, radius: Option<f64>) -> Result<(), CliError> {
    let r = load(common, |sc| {
        apply_task(sc, task, None);
        Ok(())
    })?;
    let g = graph(&r)?;
    let mut rep = Report::new(&r.scenario.header());
    if all {
        let d = pre_distance(&g, Sources::All)?;
        return match &d {
            PreDistanceResult::NegInfinity(c) => {
                rep.comment(format!("status = NEG_INFINITY\nwitness cycle: F-length {}, winding {:?}", num(c.weight), c.winding));
                rep.write(common.out.as_deref())
            }
            PreDistanceResult::Finite(f) => {
                let v = g.node_count();
                let cols: Vec<String> = std::iter::once("from".to_string()).chain((0..v).map(|j| j.to_string())).collect();
                let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
                rep.csv(&cols, (0..v).map(|i| std::iter::once(i.to_string()).chain(f.row(i).expect("all rows").iter().map(|&x| num(x)))))?;
                rep.write(common.out.as_deref())
            }
        };
    }
    let x0 = point(&r, r.scenario.task.from, "from")?;
    let a = g.grid().nearest(&x0);
    let d = pre_distance(&g, Sources::Nodes(vec![a]))?;
    if let PreDistanceResult::NegInfinity(c) = &d {
        rep.comment(format!("status = NEG_INFINITY\nwitness cycle: F-length {}, winding {:?}", num(c.weight), c.winding));
    }
    if let Some(to) = r.scenario.task.to {
        let b = g.grid().nearest(&point(&r, Some(to), "to")?);
        let (fwd, back, sym) = match &d {
            PreDistanceResult::NegInfinity(_) => (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            PreDistanceResult::Finite(f) => {
                let fwd = f.get(a, b).expect("row");
                let back = distances_to(&g, f.potential(), a)[b];
                (fwd, back, 0.5 * (fwd + back))
            }
        };
        let (pa, pb) = (g.grid().point(a), g.grid().point(b));
        rep.csv(
            &["from_x", "from_y", "to_x", "to_y", "d_f", "d_f_reverse", "d_s"],
            [[pa[0], pa[1], pb[0], pb[1], fwd, back, sym].map(num)],
        )?;
        return rep.write(common.out.as_deref());
    }
    let v = g.node_count();
    let (from, to) = match &d {
        PreDistanceResult::NegInfinity(_) => (vec![f64::NEG_INFINITY; v], vec![f64::NEG_INFINITY; v]),
        PreDistanceResult::Finite(f) => (f.row(a).expect("row").to_vec(), distances_to(&g, f.potential(), a)),
    };
    let mut cols = vec!["i", "j", "x", "y", "d_from", "d_to", "d_s"];
    if let Some(rad) = radius {
        rep.comment(format!("ball radius = {}", num(rad)));
        cols.extend(["forward_ball", "backward_ball", "symmetrized_ball"]);
    }
    rep.csv(
        &cols,
        (0..v).map(|i| {
            let s = 0.5 * (from[i] + to[i]);
            let mut row = coords(&g, i);
            row.extend([from[i], to[i], s].map(num));
            if let Some(rad) = radius {
                row.extend([from[i] < rad, to[i] < rad, s < rad].map(|b| u8::from(b).to_string()));
            }
            row
        }),
    )?;
    rep.write(common.out.as_deref())
}

fn curve_rows(curve: &Curve, m: &prerand_core::metrics::PreRandersMetric) -> Vec<Vec<String>> {
    let lift = lift_lightlike(curve, m, 0.0);
    lift.samples.iter().map(|s| vec![num(s.s), num(s.point[0]), num(s.point[1]), num(s.tau_dot), num(s.tau)]).collect()
}

fn geodesic(common: &Common, task: &TaskArgs, dir: Option<[f64; 2]>) -> Result<(), CliError> {
    let r = load(common, |sc| {
        apply_task(sc, task, dir);
        Ok(())
    })?;
    let t = &r.scenario.task;
    let m = &r.metric;
    let mut rep = Report::new(&r.scenario.header());
    let curve = if let Some(w) = t.winding {
        let l = periodic_search(m, w, &periodic_opts(&r))?;
        rep.comment(format!(
            "mode = periodic\nwinding = {:?}\nlength_f = {}\npolished = {}\ncorner_angle = {}",
            l.winding,
            num(l.length_f),
            l.polished,
            num(l.corner_angle)
        ));
        if l.vicious {
            rep.comment("length is negative: iterating the loop drives the F-length to -infinity");
        }
        l.curve
    } else if let Some(to) = t.to {
        let (x0, x1) = (point(&r, t.from, "from")?, point(&r, Some(to), "to")?);
        let hit = shoot_connect(m, &x0, &x1, &shooting(&r))?;
        rep.comment(format!("mode = shooting\nwinding = {:?}\nlength_f = {}\nresidual = {}", hit.winding, num(hit.length_f), num(hit.residual)));
        hit.curve
    } else if let Some(heading) = t.heading {
        let x0 = point(&r, t.from, "from")?;
        let span = t.span.unwrap_or(1.0);
        let v0 = h_unit(m, &x0, heading);
        let tr = integrate_pregeodesic(m, &GeodesicProblem::new(x0, v0, span).with_steps(IVP_STEPS))?;
        rep.comment(format!(
            "mode = initial value\nheading = {}\nspan = {}\nleft_chart = {}\nspeed_drift = {}\nlength_f = {}",
            num(heading),
            num(span),
            tr.left_chart,
            num(tr.speed_drift),
            num(m.length(&tr.curve))
        ));
        tr.curve
    } else {
        return Err(invalid("choose a mode: --to, --dir, --heading or --periodic"));
    };
    rep.csv(&["s", "x", "y", "f_velocity", "tau"], curve_rows(&curve, m))?;
    rep.write(common.out.as_deref())
}

fn classify(common: &Common, horizon: Option<&std::path::Path>, from: Option<[f64; 2]>) -> Result<(), CliError> {
    let r = load(common, |sc| {
        if from.is_some() {
            sc.task.from = from;
        }
        Ok(())
    })?;
    let g = graph(&r)?;
    let nm = &r.scenario.numerics;
    let d = pre_distance(&g, Sources::Nodes(vec![]))?;
    let ladder = classify_ladder(&d, &g, &r.metric, &LadderOptions { convexity_budget: nm.convexity_budget, seed: nm.seed, ..Default::default() });
    let harris = harris_classify(&g, &r.metric, Some(&ladder));
    let mut rep = Report::new(&r.scenario.header());
    rep.line(format!("eps_zero = {}", num(ladder.eps_zero)));
    if let Some(df) = ladder.max_abs_df {
        rep.line(format!("max |d_F| = {}", num(df)));
    }
    rep.line(ladder.to_string());
    rep.line("harris");
    rep.line(harris.to_string());
    rep.write(common.out.as_deref())?;

    if let Some(path) = horizon {
        let x0 = point(&r, r.scenario.task.from, "from")?;
        let a = g.grid().nearest(&x0);
        let mut h = Report::new(&r.scenario.header());
        let d = pre_distance(&g, Sources::Nodes(vec![a]))?;
        let Some(f) = d.finite() else {
            return Err(numeric("horizon functions are -infinity: the distance admits a negative cycle"));
        };
        let (plus, minus) = (f.row(a).expect("row").to_vec(), distances_to(&g, f.potential(), a));
        h.comment("t_future = d_F(from, .), t_past = -d_F(., from)");
        h.csv(
            &["i", "j", "x", "y", "t_future", "t_past"],
            (0..g.node_count()).map(|i| {
                let mut row = coords(&g, i);
                row.extend([num(plus[i]), num(-minus[i])]);
                row
            }),
        )?;
        h.write(Some(path))?;
    }
    Ok(())
}

fn weight(common: &Common) -> Result<(), CliError> {
    let r = load(common, |_| Ok(()))?;
    let g = graph(&r)?;
    let h = harris_classify(&g, &r.metric, None);
    let mut rep = Report::new(&r.scenario.header());
    rep.comment(h.to_string());
    let mut len = 0.0;
    let mut theta = 0.0;
    rep.csv(
        &["k", "from", "to", "x", "y", "h_len", "theta", "cum_h_len", "cum_theta"],
        h.weight.cycle.iter().enumerate().map(|(k, &e)| {
            let e = g.edge(e);
            let p = g.grid().point(e.from as usize);
            len += e.h_len;
            theta -= e.omega_int;
            vec![k.to_string(), e.from.to_string(), e.to.to_string(), num(p[0]), num(p[1]), num(e.h_len), num(-e.omega_int), num(len), num(theta)]
        }),
    )?;
    rep.write(common.out.as_deref())
}

fn parse_target(spec: &[String]) -> Result<TargetSpec, CliError> {
    match spec {
        [kind, s] if kind == "point" => Ok(TargetSpec::Point { at: parse_pair(s).map_err(invalid)? }),
        [kind, s] if kind == "circle" => {
            let [cx, cy, radius] = parse_triple(s).map_err(invalid)?;
            Ok(TargetSpec::Circle { center: [cx, cy], radius })
        }
        _ => Err(invalid("--target takes `point x,y` or `circle cx,cy,r`")),
    }
}

fn cutlocus(common: &Common, target: Option<Vec<String>>, levels: Option<Vec<usize>>, table: Option<&std::path::Path>) -> Result<(), CliError> {
    let r = load(common, |sc| {
        if let Some(t) = &target {
            sc.task.target = Some(parse_target(t)?);
        }
        if levels.is_some() {
            sc.task.levels = levels.clone();
        }
        Ok(())
    })?;
    let spec = r.scenario.task.target.clone().ok_or_else(|| invalid("--target is required (or set task.target in the scenario)"))?;
    let g = graph(&r)?;
    let c = spec.rasterize(g.grid())?;
    let cut = cut_locus(&g, &c)?;
    let mut rep = Report::new(&r.scenario.header());
    rep.comment(format!(
        "cut nodes = {}\nfraction = {}\ndetector agreement = {} ({})\neps_multi = {}",
        cut.cut_nodes.len(),
        num(cut.fraction),
        num(cut.agreement),
        cut.agreement_verdict,
        num(cut.eps_multi)
    ));
    if let Some(levels) = &r.scenario.task.levels {
        let rows = refinement_table(&r.metric, &spec, levels, r.scenario.numerics.stencil)?;
        let mut t = Report::default();
        t.csv(
            &["n", "cut_nodes", "fraction", "agreement"],
            rows.iter().map(|row| vec![row.n.to_string(), row.cut_nodes.to_string(), num(row.fraction), num(row.agreement)]),
        )?;
        match table {
            Some(path) => {
                let mut full = Report::new(&r.scenario.header());
                full.line(t.text().trim_end());
                full.write(Some(path))?;
            }
            None => rep.comment(format!("refinement\n{}", t.text())),
        }
    }
    let inconclusive: std::collections::BTreeSet<usize> = cut.inconclusive.iter().copied().collect();
    rep.csv(
        &["i", "j", "x", "y", "rho", "multiplicity", "cut", "horizon", "inconclusive"],
        (0..g.node_count()).map(|i| {
            let mut row = coords(&g, i);
            row.extend([
                num(cut.rho[i]),
                cut.multiplicity[i].to_string(),
                u8::from(cut.is_cut(i)).to_string(),
                num(cut.horizon[i]),
                u8::from(inconclusive.contains(&i)).to_string(),
            ]);
            row
        }),
    )?;
    rep.write(common.out.as_deref())
}

fn magnetic(common: &Common, task: &TaskArgs, b: Option<String>, energy: Option<f64>, dir: Option<[f64; 2]>) -> Result<(), CliError> {
    let r = load(common, |sc| {
        let m = sc.magnetic.as_mut().ok_or_else(|| invalid("the scenario has no [magnetic] section"))?;
        if let Some(b) = &b {
            m.b = FieldSrc::Text(b.clone());
            m.potential = None;
        }
        if let Some(e) = energy {
            m.energy = e;
        }
        apply_task(sc, task, dir);
        Ok(())
    })?;
    let MetricSource::Magnetic(s, c) = &r.source else {
        unreachable!("magnetic section checked above");
    };
    let t = &r.scenario.task;
    let nm = &r.scenario.numerics;
    let opts = MagneticOptions { audit_n: nm.n, stencil: nm.stencil, shooting: shooting(&r), periodic: periodic_opts(&r) };
    let mut rep = Report::new(&r.scenario.header());
    let curve = if let Some(w) = t.winding {
        let o = magnetic_periodic(s, *c, w, &opts)?;
        rep.comment(format!("mode = periodic\nwinding = {:?}\nlength_fc = {}\ncorner_angle = {}", o.winding, num(o.length_fc), num(o.corner_angle.unwrap_or(f64::NAN))));
        o.curve
    } else if let Some(to) = t.to {
        let (x0, x1) = (point(&r, t.from, "from")?, point(&r, Some(to), "to")?);
        let o = magnetic_connect(s, *c, &x0, &x1, &opts)?;
        rep.comment(format!("mode = connect\nwinding = {:?}\nlength_fc = {}", o.winding, num(o.length_fc)));
        o.curve
    } else if let Some(heading) = t.heading {
        let x0 = point(&r, t.from, "from")?;
        let e = Vector::new(heading.cos(), heading.sin());
        let v0 = e * (c.speed() / s.g_norm(&x0, &e));
        let span = t.span.unwrap_or(TAU);
        let tr = integrate_magnetic(s, x0, v0, span, IVP_STEPS)?;
        rep.comment(format!("mode = initial value\nheading = {}\nspan = {}\nleft_chart = {}", num(heading), num(span), tr.left_chart));
        tr.curve
    } else {
        return Err(invalid("choose a mode: --to, --dir, --heading or --periodic"));
    };
    rep.comment(format!("energy = {}", num(c.value())));
    let residuals = el_residuals(s, &curve);
    rep.csv(
        &["t", "x", "y", "vx", "vy", "energy", "el_residual"],
        curve.samples().iter().zip(&residuals).map(|(sm, &res)| {
            [sm.t, sm.point[0], sm.point[1], sm.velocity[0], sm.velocity[1], s.energy(&sm.point, &sm.velocity), res].map(num).to_vec()
        }),
    )?;
    rep.write(common.out.as_deref())
}

fn selftest(criterion: Option<usize>) -> Result<(), CliError> {
    let chosen: Vec<_> = CRITERIA.iter().filter(|c| criterion.is_none_or(|k| k == c.id)).collect();
    if chosen.is_empty() {
        return Err(invalid(format!("no criterion {}; valid ids are 1 to {}", criterion.unwrap_or(0), CRITERIA.len())));
    }
    let mut failed = 0;
    for c in chosen {
        let o = acceptance::run(c);
        println!("{o}");
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(numeric(format!("{failed} acceptance criteria failed")));
    }
    Ok(())
}
