//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails. Every tolerance is re-applied here from the raw columns rather
//! than trusting the `pass` column of the binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hartree::energy::pair_interaction;
use hartree::quadrature::QuadratureSpec;
use hartree::{make_problem, SharpConstants};
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Path) -> Outcome);

const BIN: &str = env!("CARGO_BIN_EXE_hartree");

struct Run {
    code: i32,
    stdout: Vec<u8>,
    stderr: String,
}

fn hartree(dir: &Path, config: &str, args: &[&str]) -> Run {
    let path = dir.join(format!("cfg{}.json", tag(config, args)));
    std::fs::write(&path, config).unwrap();
    let out = Command::new(BIN)
        .arg("--config")
        .arg(&path)
        .args(args)
        .output()
        .expect("cannot start the hartree binary");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Stable file name for a config/argument pair.
fn tag(config: &str, args: &[&str]) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    (config, args).hash(&mut h);
    h.finish()
}

/// Runs with `--out` and returns the produced files by name.
fn hartree_files(dir: &Path, config: &str, args: &[&str]) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let out = dir.join(format!("out{}", tag(config, args)));
    let _ = std::fs::remove_dir_all(&out);
    let mut full = vec!["--out", out.to_str().unwrap()];
    full.extend_from_slice(args);
    let r = hartree(dir, config, &full);
    if r.code != 0 {
        return Err(format!("{args:?} exited {}: {}", r.code, r.stderr.trim()));
    }
    let mut files = BTreeMap::new();
    for e in std::fs::read_dir(&out).unwrap() {
        let e = e.unwrap();
        files.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap());
    }
    Ok(files)
}

type Rows = Vec<BTreeMap<String, String>>;

fn csv_rows(bytes: &[u8]) -> Rows {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn f(row: &BTreeMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap_or_else(|_| panic!("column {col} is not a number: {}", row[col]))
}

fn verify_rows(dir: &Path, config: &str, suite: &str) -> Result<Rows, String> {
    let r = hartree(dir, config, &["verify", "--suite", suite]);
    if r.code != 0 {
        return Err(format!("verify --suite {suite} exited {}: {}", r.code, r.stderr.trim()));
    }
    Ok(csv_rows(&r.stdout))
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("invalid JSON output")
}

fn rel_err(expected: f64, actual: f64) -> f64 {
    (actual - expected).abs() / expected.abs()
}

fn within(limit: Duration, t0: Instant, what: &str) -> Result<(), String> {
    let e = t0.elapsed();
    if e < limit {
        Ok(())
    } else {
        Err(format!("{what} took {e:.1?}, limit {limit:?}"))
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn riesz_identity(dir: &Path) -> Outcome {
    let t0 = Instant::now();
    let rows = verify_rows(dir, r#"{"problem": {"N": 6, "alpha": 4}}"#, "riesz")?;
    within(Duration::from_secs(60), t0, "riesz suite")?;
    let mut worst: f64 = 0.0;
    let mut seen = 0;
    for r in rows.iter().filter(|r| r["check_id"].starts_with("identity_s2_")) {
        let e = rel_err(f(r, "expected"), f(r, "actual"));
        ensure(e <= 1e-3, || format!("{}: relative error {e:e}", r["check_id"]))?;
        worst = worst.max(e);
        seen += 1;
    }
    ensure(seen == 3, || format!("expected 3 identity rows, got {seen}"))?;
    Ok(format!("max rel error {worst:.2e} at x in {{0, e1, 2e1}}"))
}

fn riesz_closed_form(dir: &Path) -> Outcome {
    let mut parts = Vec::new();
    for (n, alpha) in [(6, 4.0), (5, 3.5)] {
        let t0 = Instant::now();
        let cfg = format!(r#"{{"problem": {{"N": {n}, "alpha": {alpha}}}}}"#);
        let rows = verify_rows(dir, &cfg, "riesz")?;
        within(Duration::from_secs(120), t0, "closed-form check")?;
        let mut worst: f64 = 0.0;
        let mut radii = 0;
        for r in rows.iter().filter(|r| r["check_id"].starts_with("bubble_potential_r")) {
            let e = rel_err(f(r, "expected"), f(r, "actual"));
            ensure(e <= 1e-3, || format!("(N, α) = ({n}, {alpha}) {}: relative error {e:e}", r["check_id"]))?;
            worst = worst.max(e);
            radii += 1;
        }
        ensure(radii == 5, || format!("expected 5 radii, got {radii}"))?;
        parts.push(format!("({n},{alpha}) max rel {worst:.2e} in {:.1?}", t0.elapsed()));
    }
    Ok(parts.join("; "))
}

fn sharp_constant(dir: &Path) -> Outcome {
    let rows = verify_rows(dir, "{}", "hls")?;
    let get = |id: &str| rows.iter().find(|r| r["check_id"] == id).ok_or(format!("missing row {id}"));
    let mut worst: f64 = 0.0;
    for id in ["hls_quotient_lambda1", "hls_quotient_lambda3"] {
        let r = get(id)?;
        let e = rel_err(f(r, "expected"), f(r, "actual"));
        ensure(e <= 1e-3, || format!("{id}: relative error {e:e}"))?;
        worst = worst.max(e);
    }
    let s = get("sobolev_rayleigh_vs_gamma")?;
    let es = rel_err(f(s, "expected"), f(s, "actual"));
    ensure(es <= 1e-9, || format!("Rayleigh S off the gamma form by {es:e}"))?;
    Ok(format!("quotient vs S_HL max rel {worst:.2e}; Rayleigh S rel {es:.1e}"))
}

fn conformal_invariance(dir: &Path) -> Outcome {
    let rows = verify_rows(dir, "{}", "invariance")?;
    let mut n = 0;
    let mut worst: f64 = 0.0;
    for r in rows.iter().filter(|r| r["check_id"].starts_with("energy_lambda")) {
        let e = rel_err(f(r, "expected"), f(r, "actual"));
        ensure(e <= 1e-3, || format!("{}: relative spread {e:e}", r["check_id"]))?;
        worst = worst.max(e);
        n += 1;
    }
    ensure(n == 3, || format!("expected 3 energy pairs, got {n}"))?;
    let mut d = 0;
    for r in rows.iter().filter(|r| r["check_id"].starts_with("dj_dlambda_")) {
        // tol column is 3·est_error
        let v = f(r, "actual");
        ensure(v.abs() <= f(r, "tol"), || format!("{}: {v:e} exceeds {}", r["check_id"], r["tol"]))?;
        d += 1;
    }
    ensure(d == 3, || format!("expected 3 derivative rows, got {d}"))?;
    Ok(format!("J spread {worst:.1e}; dJ/dλ within 3·est_error at λ in {{0.5, 1, 2}}"))
}

fn interaction_slopes(_: &Path) -> Outcome {
    let t0 = Instant::now();
    let mut parts = Vec::new();
    for (n, alpha) in [(6usize, 4.0), (5, 3.5)] {
        let p = make_problem(n, alpha).map_err(|e| e.to_string())?;
        let c = SharpConstants::compute(&p).map_err(|e| e.to_string())?.bubble_coeff;
        let spec = QuadratureSpec::two_center();
        let z1 = vec![0.0; n];
        let at = |d: f64, l: f64| {
            let mut z2 = vec![0.0; n];
            z2[0] = d;
            pair_interaction(&p, c, &z1, &z2, l, &spec).map(|r| r.value).map_err(|e| e.to_string())
        };
        let base = at(1.0, 40.0)?;
        let far = at(2.0, 40.0)?;
        let sharp = at(1.0, 80.0)?;
        ensure(base < 0.0 && far < 0.0 && sharp < 0.0, || format!("N={n}: interaction not negative"))?;
        let sd = (far / base).log2();
        let sl = (sharp / base).log2();
        let nf = n as f64;
        ensure((sd + nf - 2.0).abs() <= 0.1, || format!("N={n}: distance slope {sd}"))?;
        ensure((sl + nf - 1.0).abs() <= 0.1, || format!("N={n}: λ slope {sl}"))?;
        parts.push(format!("N={n}: slopes {sd:.3} (d), {sl:.3} (λ)"));
    }
    within(Duration::from_secs(300), t0, "pair interaction")?;
    Ok(parts.join("; "))
}

fn expansion_structure(dir: &Path) -> Outcome {
    let files = hartree_files(dir, "{}", &["expansion"])?;
    let fit = json(&files["expansion_fit.json"]);
    let a1 = fit["a1"].as_f64().unwrap();
    ensure(a1 > 0.0, || format!("A1 = {a1} not positive"))?;
    ensure(fit["a2"].is_null(), || "A2 reported for m = 1".into())?;
    let scaled: Vec<f64> = csv_rows(&files["expansion.csv"])
        .iter()
        .filter(|r| (20.0..=80.0).contains(&f(r, "lambda")))
        .map(|r| f(r, "lambda3_dj_dlambda"))
        .collect();
    ensure(scaled.len() >= 3, || "too few λ in [20, 80]".into())?;
    let mut spread: f64 = 0.0;
    for a in &scaled {
        for b in &scaled {
            spread = spread.max((a - b).abs() / b.abs());
        }
    }
    ensure(spread <= 0.05, || format!("λ³·dJ/dλ spread {spread:.3} over [20, 80]"))?;

    let pair = hartree_files(dir, r#"{"expansion": {"m": 2, "potential": "constant_one"}}"#, &["expansion"])?;
    let a2 = json(&pair["expansion_fit.json"])["a2"].as_f64().ok_or("no A2 for m = 2")?;
    ensure(a2 > 0.0, || format!("A2 = {a2} not positive"))?;

    let syn = hartree_files(dir, r#"{"expansion": {"m": 2, "synthetic": {"a1": 7.2, "a2": 1700}}}"#, &["expansion"])?;
    let s = &json(&syn["expansion_fit.json"])["synthetic"];
    let e1 = s["a1_rel_error"].as_f64().unwrap();
    let e2 = s["a2_rel_error"].as_f64().unwrap();
    ensure(e1 <= 1e-8 && e2 <= 1e-8, || format!("synthetic round trip errors {e1:e}, {e2:e}"))?;
    Ok(format!("A1 = {a1:.4}, λ³dJ spread {:.2}%, A2 = {a2:.1}, synthetic {:.0e}", 100.0 * spread, e1.max(e2)))
}

fn reduced_solve(dir: &Path) -> Outcome {
    let mut lams = Vec::new();
    for m in [8usize, 16, 32, 64] {
        let r = hartree(dir, &format!(r#"{{"solve": {{"m": {m}}}}}"#), &["solve"]);
        ensure(r.code == 0, || format!("m = {m}: exit {}: {}", r.code, r.stderr.trim()))?;
        let v = json(&r.stdout);
        let n = v["N"].as_f64().unwrap();
        let lam = v["lambda_m"].as_f64().unwrap();
        let (l0, l1) = (v["window"][0].as_f64().unwrap(), v["window"][1].as_f64().unwrap());
        let t = lam / (m as f64).powf((n - 2.0) / (n - 4.0));
        ensure((l0..=l1).contains(&t), || format!("m = {m}: t = {t} outside [{l0}, {l1}]"))?;
        let dr = v["r_bar_m"].as_f64().unwrap() - 1.0;
        let dx: f64 = v["x_bar_pp_m"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap().powi(2)).sum();
        let dist = (dr * dr + dx).sqrt();
        ensure(dist <= lam.powf(-0.9), || format!("m = {m}: distance {dist} > λ^-0.9"))?;
        let res = v["balance_residual"].as_f64().unwrap();
        ensure(res.abs() <= 1e-12, || format!("m = {m}: balance residual {res:e}"))?;
        lams.push(format!("{lam:.2}"));
    }
    let r = hartree(
        dir,
        r#"{"problem": {"N": 6, "alpha": 4}, "solve": {"m": 10, "coefficients": "fixed", "a1": 3.0, "a3": 3.0}}"#,
        &["solve"],
    );
    ensure(r.code == 0, || format!("fixed solve exited {}: {}", r.code, r.stderr.trim()))?;
    let lam = json(&r.stdout)["lambda_m"].as_f64().unwrap();
    ensure(lam == 100.0, || format!("A1 = A3, m = 10 gave λ = {lam:e}"))?;
    Ok(format!("λ_m = [{}] in window; A1 = A3, m = 10 gives λ = {lam}", lams.join(", ")))
}

fn pohozaev(dir: &Path) -> Outcome {
    let rows = verify_rows(dir, "{}", "pohozaev")?;
    let mut exact = 0;
    let mut worst: f64 = 0.0;
    for r in rows.iter().filter(|r| r["check_id"].starts_with("bubble_")) {
        let v = f(r, "actual");
        let tol = f(r, "tol");
        ensure(v.abs() <= tol, || format!("{}: {v:e} > 3·est_error = {tol:e}", r["check_id"]))?;
        worst = worst.max(v.abs() / tol);
        exact += r["check_id"].starts_with("bubble_dilation_rho") as usize;
    }
    ensure(exact == 3, || format!("expected ρ in {{2.5, 3.5, 4.5}}δ, got {exact} rows"))?;
    let fd = rows.iter().find(|r| r["check_id"] == "bumped_dilation_vs_fd").ok_or("missing FD row")?;
    let diff = (f(fd, "actual") - f(fd, "expected")).abs();
    ensure(diff <= f(fd, "tol"), || format!("perturbed vs FD differ by {diff:e} > {}", fd["tol"]))?;
    Ok(format!("exact bubble at {:.0e} of 3·est_error; perturbed vs FD diff {diff:.1e} (tol {})", worst, fd["tol"]))
}

fn lemma_checks(dir: &Path) -> Outcome {
    let r = hartree(dir, "{}", &["lemma-check"]);
    ensure(r.code == 0, || format!("lemma-check exited {}: {}", r.code, r.stderr.trim()))?;
    let rows = csv_rows(&r.stdout);
    let mut worst: f64 = 0.0;
    for row in &rows {
        let w = f(row, "worst_ratio");
        let g = f(row, "growth");
        ensure(w.is_finite(), || format!("{} [{}]: worst ratio {w}", row["lemma"], row["parameters"]))?;
        ensure(g <= 1.1, || format!("{} [{}]: growth {g}", row["lemma"], row["parameters"]))?;
        worst = worst.max(g);
    }
    let lemmas: std::collections::BTreeSet<&str> = rows.iter().map(|r| r["lemma"].as_str()).collect();
    ensure(["B1", "B3", "B4"].iter().all(|l| lemmas.contains(l)), || format!("lemmas covered: {lemmas:?}"))?;
    Ok(format!("{} cases, worst growth {worst:.4}", rows.len()))
}

/// Shrunk workloads; determinism does not depend on the tolerances.
const CHEAP: &str = r#"{
  "pohozaev": {"rho_factors": [3.5]},
  "quadrature": {"tube": {"rel_tol": 1e-2}}
}"#;

fn determinism(dir: &Path) -> Outcome {
    let commands: [&[&str]; 12] = [
        &["--print-config"],
        &["constants"],
        &["verify", "--suite", "riesz"],
        &["verify", "--suite", "hls"],
        &["verify", "--suite", "invariance"],
        &["verify", "--suite", "lemmas"],
        &["verify", "--suite", "pohozaev"],
        &["expansion"],
        &["solve"],
        &["pohozaev"],
        &["norms"],
        &["lemma-check"],
    ];
    for cmd in commands {
        let mut outputs = Vec::new();
        for threads in [None, Some("1"), Some("4"), Some("8")] {
            let mut args: Vec<&str> = cmd.to_vec();
            if let Some(t) = threads {
                args.extend(["--threads", t]);
            }
            let files = hartree_files(dir, CHEAP, &args)?;
            ensure(!files.is_empty(), || format!("{cmd:?} wrote nothing"))?;
            outputs.push((threads.unwrap_or("default"), files));
        }
        // the default-thread run is repeated to cover reruns
        let again = hartree_files(dir, CHEAP, cmd)?;
        outputs.push(("default rerun", again));
        let (_, first) = &outputs[0];
        for (label, o) in &outputs[1..] {
            ensure(o == first, || format!("{cmd:?} differs between default threads and {label}"))?;
        }
    }
    Ok(format!("{} commands identical across reruns and 1/4/8 threads", commands.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Riesz identity at s = 2", riesz_identity),
        ("closed-form bubble Riesz potential", riesz_closed_form),
        ("sharp-constant attainment", sharp_constant),
        ("conformal invariance of J", conformal_invariance),
        ("pair interaction asymptotics", interaction_slopes),
        ("expansion structure", expansion_structure),
        ("reduced solve", reduced_solve),
        ("Pohozaev residuals", pohozaev),
        ("decay lemma checks", lemma_checks),
        ("determinism", determinism),
    ];
    let tmp = tempfile::tempdir().unwrap();
    let dir: PathBuf = tmp.path().to_path_buf();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(|| check(&dir)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name} [{secs:.1}s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name} [{secs:.1}s]: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
