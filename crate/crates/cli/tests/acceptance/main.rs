//! Acceptance gate. Each test is one criterion and prints one summary line;
//! the full-data regression needs a real dataset and reports itself as
//! skipped unless `PS_BACI_DIR` points at one.

mod oracle;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ndarray::Array2;
use prodspace::integration::{
    combine_max_rca, combine_pooled_exports, density_delta, run_scenario, ScenarioMode,
    ScenarioSpec,
};
use prodspace::metrics::{
    binarize, density, density_all, diversification, export_shares, proximity, rca, reflections,
    sophistication, ubiquity, MMatrix, ProximityMatrix,
};
use prodspace::product_space::{percolation_sweep, ThresholdRule};
use prodspace::trade_data::{classify_sector, ExportMatrix, SectorClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three countries by three products, small enough that every metric has a
/// hand-derived value. World totals: p=20, q=20, r=80.
fn toy() -> ExportMatrix {
    ExportMatrix {
        year: 2005,
        countries: vec!["A".into(), "B".into(), "C".into()],
        products: vec!["p".into(), "q".into(), "r".into()],
        values: ndarray::array![[10.0, 0.0, 0.0], [10.0, 10.0, 0.0], [0.0, 10.0, 80.0]],
    }
}

/// Random export matrix with sorted labels, a sprinkling of zero cells, and
/// occasional all-zero rows and columns so the degenerate flags get hit.
fn random_exports(rng: &mut ChaCha8Rng) -> ExportMatrix {
    let nc = rng.gen_range(1..=12);
    let np = rng.gen_range(1..=15);
    let mut values = Array2::zeros((nc, np));
    for v in values.iter_mut() {
        if rng.gen_bool(0.75) {
            *v = rng.gen_range(0.01..400.0);
        }
    }
    if nc > 2 && rng.gen_bool(0.3) {
        let r = rng.gen_range(0..nc);
        values.row_mut(r).fill(0.0);
    }
    if np > 2 && rng.gen_bool(0.3) {
        let c = rng.gen_range(0..np);
        values.column_mut(c).fill(0.0);
    }
    if values.iter().all(|&v| v == 0.0) {
        values[(0, 0)] = 1.0;
    }
    ExportMatrix {
        year: 2005,
        countries: (0..nc).map(|i| format!("C{i:02}")).collect(),
        products: (0..np).map(|j| format!("P{j:02}")).collect(),
        values,
    }
}

fn as_rows(values: &Array2<f64>) -> Vec<Vec<f64>> {
    values.rows().into_iter().map(|r| r.to_vec()).collect()
}

#[test]
fn oracle_equivalence_on_randomized_matrices() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
    for case in 0..200 {
        let x = random_exports(&mut rng);
        let raw = as_rows(&x.values);

        let r = rca(&x).unwrap();
        let want_r = oracle::rca(&raw);
        for (c, row) in want_r.iter().enumerate() {
            for (p, &want) in row.iter().enumerate() {
                let got = r.values[(c, p)];
                assert!(
                    (got - want).abs() <= 1e-12,
                    "case {case}: rca[{c}][{p}] {got} vs oracle {want}"
                );
            }
        }

        let m = binarize(&r, 1.0).unwrap();
        let want_m = oracle::binarize(&want_r, 1.0);
        for (c, row) in want_m.iter().enumerate() {
            for (p, &want) in row.iter().enumerate() {
                assert_eq!(m.bits[(c, p)], want, "case {case}: bit [{c}][{p}]");
            }
        }
        assert_eq!(diversification(&m), oracle::diversification(&want_m), "case {case}");
        assert_eq!(ubiquity(&m), oracle::ubiquity(&want_m), "case {case}");

        let phi = proximity(&m);
        let want_phi = oracle::proximity(&want_m);
        for (i, row) in want_phi.iter().enumerate() {
            let mut neighborhood = 0.0;
            for (j, &want) in row.iter().enumerate() {
                let got = phi.values[(i, j)];
                assert!(
                    (got - want).abs() <= 1e-12,
                    "case {case}: phi[{i}][{j}] {got} vs oracle {want}"
                );
                if i != j {
                    neighborhood += want;
                }
            }
            assert_eq!(phi.isolated[i], neighborhood == 0.0, "case {case}: isolated[{i}]");
        }

        let dens = density_all(&m, &phi).unwrap();
        let want_dens = oracle::density(&want_m, &want_phi);
        for (c, row) in want_dens.iter().enumerate() {
            for (p, &want) in row.iter().enumerate() {
                let got = dens[c].values[p];
                assert!(
                    (got - want).abs() <= 1e-12,
                    "case {case}: density[{c}][{p}] {got} vs oracle {want}"
                );
            }
        }

        if m.bits.iter().any(|&b| b) {
            let depth = 6;
            let state = reflections(&m, depth).unwrap();
            let want_refl = oracle::reflections(&want_m, depth);
            let kept_c: Vec<String> = want_refl
                .kept_countries
                .iter()
                .map(|&i| x.countries[i].clone())
                .collect();
            let kept_p: Vec<String> = want_refl
                .kept_products
                .iter()
                .map(|&i| x.products[i].clone())
                .collect();
            assert_eq!(state.countries, kept_c, "case {case}: kept countries");
            assert_eq!(state.products, kept_p, "case {case}: kept products");
            for level in 0..=depth {
                for (i, &want) in want_refl.k_country[level].iter().enumerate() {
                    let got = state.k_country[level][i];
                    assert!(
                        (got - want).abs() <= 1e-12,
                        "case {case}: k_country[{level}][{i}] {got} vs oracle {want}"
                    );
                }
                for (i, &want) in want_refl.k_product[level].iter().enumerate() {
                    let got = state.k_product[level][i];
                    assert!(
                        (got - want).abs() <= 1e-12,
                        "case {case}: k_product[{level}][{i}] {got} vs oracle {want}"
                    );
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "oracle sweep took {elapsed:?}");
    println!("oracle equivalence: 200 randomized matrices agreed in {elapsed:.2?}");
}

#[test]
fn toy_fixture_values_reproduced() {
    let tol = 1e-9;
    let x = toy();
    let r = rca(&x).unwrap();
    let close = |got: f64, want: f64, what: &str| {
        assert!((got - want).abs() <= tol, "{what}: {got} vs {want}");
    };
    close(r.row("A").unwrap()[0], 6.0, "rca A,p");
    close(r.row("B").unwrap()[0], 3.0, "rca B,p");
    close(r.row("B").unwrap()[1], 3.0, "rca B,q");
    close(r.row("C").unwrap()[1], 2.0 / 3.0, "rca C,q");
    close(r.row("C").unwrap()[2], 4.0 / 3.0, "rca C,r");

    let m = binarize(&r, 1.0).unwrap();
    let phi = proximity(&m);
    close(phi.values[(0, 1)], 0.5, "phi p,q");
    close(phi.values[(1, 0)], 0.5, "phi q,p");
    close(phi.values[(0, 2)], 0.0, "phi p,r");
    close(phi.values[(1, 2)], 0.0, "phi q,r");

    let a = density("A", m.row_bits(0), &phi).unwrap();
    close(a.values[1], 1.0, "density A,q");

    let state = reflections(&m, 1).unwrap();
    close(state.k_product[1][0], 1.5, "k_p,1 of p");
    close(state.k_product[1][1], 2.0, "k_p,1 of q");
    close(state.k_product[1][2], 1.0, "k_p,1 of r");

    let s = sophistication(&m, 1).unwrap();
    let spread = (1.5f64).sqrt();
    close(s.values[0], 0.0, "z of p");
    close(s.values[1], spread, "z of q");
    close(s.values[2], -spread, "z of r");

    let pooled = combine_pooled_exports(&x, &["A".into(), "B".into()], "A+B").unwrap();
    let pooled_rca = rca(&pooled).unwrap();
    close(pooled_rca.row("A+B").unwrap()[0], 4.0, "pooled rca p");
    close(pooled_rca.row("A+B").unwrap()[1], 2.0, "pooled rca q");

    let regional = combine_max_rca(&r, &["A".into(), "C".into()]).unwrap();
    let regional_bits: Vec<bool> = regional.iter().map(|&v| v >= 1.0).collect();
    let dd = density_delta(m.row_bits(2), &regional_bits, &phi).unwrap();
    close(dd.delta[1], 1.0, "delta C,q");

    println!("toy fixture: all pinned values reproduced within {tol:e}");
}

#[test]
fn invariant_suite_holds() {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

    // boundary cases of the sector buckets
    assert_eq!(classify_sector("279999").unwrap(), SectorClass::AgricultureAndFood);
    assert_eq!(classify_sector("280000").unwrap(), SectorClass::Other);
    assert_eq!(classify_sector("499999").unwrap(), SectorClass::Other);
    assert_eq!(classify_sector("500000").unwrap(), SectorClass::TextilesAndGarments);
    assert_eq!(classify_sector("679999").unwrap(), SectorClass::TextilesAndGarments);
    assert_eq!(classify_sector("680000").unwrap(), SectorClass::Other);

    let values = (1..=10usize, 1..=12usize).prop_flat_map(|(nc, np)| {
        proptest::collection::vec(
            proptest::collection::vec(
                prop_oneof![2 => Just(0.0f64), 5 => 0.01..80.0f64],
                np,
            ),
            nc,
        )
    });
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 128,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner
        .run(&(values, any::<u64>()), |(mut raw, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if raw.iter().flatten().all(|&v| v == 0.0) {
                raw[0][0] = 1.0;
            }
            let nc = raw.len();
            let np = raw[0].len();
            let x = ExportMatrix {
                year: 2005,
                countries: (0..nc).map(|i| format!("C{i:02}")).collect(),
                products: (0..np).map(|j| format!("P{j:02}")).collect(),
                values: Array2::from_shape_fn((nc, np), |(c, p)| raw[c][p]),
            };
            let r = rca(&x).unwrap();

            // a country's world-share-weighted mean RCA is exactly its
            // export shares summed, which is 1
            let grand: f64 = x.values.iter().sum();
            for c in 0..nc {
                let row_total: f64 = x.values.row(c).iter().sum();
                if row_total == 0.0 {
                    continue;
                }
                let mut identity = 0.0;
                for p in 0..np {
                    let world: f64 = x.values.column(p).iter().sum();
                    identity += world / grand * r.values[(c, p)];
                }
                assert!((identity - 1.0).abs() <= 1e-9, "share identity: {identity}");
            }

            // units cancel out of the ratio of shares
            let lambda = 10f64.powf(rng.gen_range(-3.0..3.0));
            let scaled = ExportMatrix {
                year: x.year,
                countries: x.countries.clone(),
                products: x.products.clone(),
                values: x.values.mapv(|v| v * lambda),
            };
            let r2 = rca(&scaled).unwrap();
            for (a, b) in r.values.iter().zip(r2.values.iter()) {
                assert!((a - b).abs() <= 1e-12, "scale invariance: {a} vs {b}");
            }

            let m = binarize(&r, 1.0).unwrap();
            let phi = proximity(&m);
            let ubiq = ubiquity(&m);
            for i in 0..np {
                for j in 0..np {
                    assert_eq!(
                        phi.values[(i, j)].to_bits(),
                        phi.values[(j, i)].to_bits(),
                        "symmetry at [{i}][{j}]"
                    );
                    if i == j {
                        continue;
                    }
                    let co = (0..nc)
                        .filter(|&c| m.bits[(c, i)] && m.bits[(c, j)])
                        .count() as f64;
                    for u in [ubiq[i], ubiq[j]] {
                        if u > 0 {
                            assert!(
                                phi.values[(i, j)] <= co / u as f64 + 1e-12,
                                "phi exceeds a conditional at [{i}][{j}]"
                            );
                        }
                    }
                }
            }

            let dens = density_all(&m, &phi).unwrap();
            for d in &dens {
                assert!(d.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }

            // growing the basket can only cover more of any neighborhood
            let c = rng.gen_range(0..nc);
            let unset: Vec<usize> = (0..np).filter(|&p| !m.bits[(c, p)]).collect();
            if !unset.is_empty() {
                let flip = unset[rng.gen_range(0..unset.len())];
                let mut richer: Vec<bool> = m.row_bits(c).to_vec();
                richer[flip] = true;
                let after = density("flip", &richer, &phi).unwrap();
                for p in 0..np {
                    assert!(
                        after.values[p] >= dens[c].values[p] - 1e-15,
                        "bit flip lowered density at {p}"
                    );
                }
            }

            if nc >= 2 {
                let k = rng.gen_range(2..=nc.min(4));
                let mut picks: Vec<usize> = (0..nc).collect();
                for i in 0..k {
                    let j = rng.gen_range(i..nc);
                    picks.swap(i, j);
                }
                let members: Vec<String> =
                    picks[..k].iter().map(|&i| x.countries[i].clone()).collect();

                let combined = combine_max_rca(&r, &members).unwrap();
                let regional_bits: Vec<bool> = combined.iter().map(|&v| v >= 1.0).collect();
                for (p, &bit) in regional_bits.iter().enumerate() {
                    let or = picks[..k].iter().any(|&i| m.bits[(i, p)]);
                    assert_eq!(bit, or, "regional bit {p} is not the member OR");
                }

                let member_bits = m.row_bits(picks[0]);
                let dd = density_delta(member_bits, &regional_bits, &phi).unwrap();
                for p in 0..np {
                    assert!(dd.delta[p] >= 0.0, "negative gain at {p}");
                    let rebuilt = dd.member[p] + dd.delta[p];
                    assert!(
                        (rebuilt - dd.regional[p]).abs() <= 1e-9,
                        "member+delta != regional at {p}"
                    );
                }
            }

            let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
            let sweep = percolation_sweep(&phi, &grid, ThresholdRule::Inclusive).unwrap();
            for pair in sweep.windows(2) {
                assert!(
                    pair[1].giant_fraction <= pair[0].giant_fraction + 1e-12,
                    "giant fraction grew across the sweep"
                );
                assert!(pair[1].edge_count <= pair[0].edge_count);
            }
            Ok(())
        })
        .unwrap();
    println!("invariants: 128 generated matrices, all properties held");
}

/// Every file under `dir`, keyed by its name, so two output trees can be
/// compared byte for byte.
fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            out.insert(
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out
}

fn run_tool(dir: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_prodspace"))
        .current_dir(dir)
        .env_remove("PS_DATA_DIR")
        .args(args)
        .status()
        .unwrap();
    assert!(status.success(), "prodspace {args:?} failed");
}

#[test]
fn pipeline_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let agri = ["010121", "020130", "070810", "080440", "090240", "100590", "150910", "170199", "200820", "240220"];
    let textile = ["510529", "520512", "540233", "560749", "580421", "600192", "610462", "620342", "630260"];
    let other = ["271000", "283620", "300490", "390760", "410110", "440726", "720918", "840731", "870323", "940360"];
    let products: Vec<&str> = agri.iter().chain(&textile).chain(&other).copied().collect();
    let countries = ["ARG", "BOL", "CHL", "ECU", "GUY", "PER", "PRY", "URY"];

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut csv = String::from("year,exporter,importer,product,value\n");
    for year in [2004, 2005] {
        for c in countries {
            for p in &products {
                if rng.gen_bool(0.65) {
                    let value = 10f64.powf(rng.gen_range(0.0..5.0));
                    csv.push_str(&format!("{year},{c},XXX,{p},{value:.3}\n"));
                }
            }
        }
    }
    std::fs::write(dir.join("raw.csv"), csv).unwrap();
    std::fs::write(
        dir.join("ps.toml"),
        "data_dir = \"data\"\nyears = \"2004:2005\"\n",
    )
    .unwrap();

    for out in ["out1", "out2"] {
        run_tool(dir, &["--config", "ps.toml", "ingest", "--input", "raw.csv"]);
        run_tool(dir, &["--config", "ps.toml", "metrics"]);
        run_tool(
            dir,
            &[
                "--config", "ps.toml", "report", "--country", "CHL", "--members",
                "CHL,ECU,PER", "--out", out,
            ],
        );
    }

    let first = dir_contents(&dir.join("out1"));
    let second = dir_contents(&dir.join("out2"));
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>(),
        "the two runs produced different file sets"
    );
    for (name, bytes) in &first {
        assert_eq!(bytes, &second[name], "{name} differs between runs");
    }
    for expected in ["CHL_top_value.csv", "graph.gexf", "scenario.json", "manifest.json"] {
        assert!(first.contains_key(expected), "missing {expected}");
    }
    println!(
        "determinism: two pipeline runs, {} files each, byte-identical",
        first.len()
    );
}

#[test]
fn kernels_meet_time_and_memory_budgets() {
    let (nc, np) = (232usize, 5109usize);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bits = Array2::from_shape_fn((nc, np), |_| rng.gen_bool(0.10));
    let m = MMatrix {
        year: 2005,
        countries: (0..nc).map(|i| format!("C{i:03}")).collect(),
        products: (0..np).map(|j| format!("{j:06}")).collect(),
        threshold: 1.0,
        bits,
    };

    let t0 = Instant::now();
    let phi = proximity(&m);
    let prox_time = t0.elapsed();
    assert!(
        prox_time.as_secs_f64() < 60.0,
        "proximity took {prox_time:?} on {nc}x{np}"
    );

    let t1 = Instant::now();
    let dens = density_all(&m, &phi).unwrap();
    let dens_time = t1.elapsed();
    assert!(
        dens_time.as_secs_f64() < 5.0,
        "density took {dens_time:?} for {nc} countries"
    );
    assert_eq!(dens.len(), nc);

    let status = std::fs::read_to_string("/proc/self/status").unwrap();
    let hwm_kb: u64 = status
        .lines()
        .find(|l| l.starts_with("VmHWM"))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        hwm_kb < 2 * 1024 * 1024,
        "peak memory {hwm_kb} kB exceeds 2 GB"
    );
    println!(
        "performance: proximity {prox_time:.2?}, density {dens_time:.2?}, peak {:.0} MB",
        hwm_kb as f64 / 1024.0
    );
}

/// Kenya's thirty largest exports with the published sophistication column,
/// used only for rank correlation.
const KENYA_TOP30_SOPHISTICATION: [(&str, f64); 30] = [
    ("090240", -2.480),
    ("060310", -1.860),
    ("271000", -1.243),
    ("620462", -1.859),
    ("090111", -2.903),
    ("070820", -2.000),
    ("070810", -1.718),
    ("200820", -1.986),
    ("160414", -2.529),
    ("620342", -1.739),
    ("030420", -1.776),
    ("252329", -1.349),
    ("060210", -1.617),
    ("283620", -0.220),
    ("200559", -1.011),
    ("070990", -2.076),
    ("080440", -0.665),
    ("030410", -2.063),
    ("721049", -0.073),
    ("080290", -2.022),
    ("210120", -0.274),
    ("300490", 0.496),
    ("610462", -2.233),
    ("252922", -1.546),
    ("200940", -1.430),
    ("410110", -1.772),
    ("130214", -2.640),
    ("720918", -0.816),
    ("611020", -2.245),
    ("121190", -2.209),
];

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean).powi(2);
        vb += (rb[i] - mean).powi(2);
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Gated on a user-supplied directory of full bilateral trade CSVs for
/// 2000-2005 (BACI layout: t,i,j,k,v,q columns or the long-form names). A
/// file whose name contains "countr" is taken as the code,iso3,name registry.
#[test]
fn full_dataset_regression() {
    let Some(dir) = std::env::var_os("PS_BACI_DIR") else {
        println!("full-data regression: SKIPPED (set PS_BACI_DIR to a directory of 2000-2005 trade CSVs)");
        return;
    };
    let dir = std::path::PathBuf::from(dir);
    let years: Vec<i32> = (2000..=2005).collect();

    let mut registry = None;
    let mut trade_files = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if !name.ends_with(".csv") {
            continue;
        }
        if name.contains("countr") {
            let file = std::fs::File::open(&path).unwrap();
            registry = prodspace::trade_data::CountryRegistry::from_reader(file).ok();
        } else if !name.contains("product") {
            trade_files.push(path);
        }
    }
    assert!(!trade_files.is_empty(), "no trade CSVs under PS_BACI_DIR");

    // parse file by file, fold into per-year matrices, and drop the records
    // so peak memory stays near one file's worth
    let mut per_year: BTreeMap<i32, Vec<ExportMatrix>> = BTreeMap::new();
    for path in &trade_files {
        let file = std::fs::File::open(path).unwrap();
        let (records, report) = prodspace::trade_data::parse_trade_records(
            file,
            &prodspace::trade_data::IngestFormat::default(),
            registry.as_ref(),
        )
        .unwrap();
        assert!(
            report.rejected.len() * 100 < report.rows_ok.max(1),
            "{}: more than 1% of rows rejected",
            path.display()
        );
        for &year in &years {
            if records.iter().any(|r| r.year == year) {
                let matrix = prodspace::trade_data::aggregate_exports(&records, year).unwrap();
                per_year.entry(year).or_default().push(matrix);
            }
        }
    }
    let mut matrices = BTreeMap::new();
    for &year in &years {
        let parts = per_year.remove(&year).unwrap_or_default();
        assert!(!parts.is_empty(), "no records for {year}");
        matrices.insert(year, prodspace::trade_data::sum_matrices(&parts).unwrap());
    }

    let resolve = |iso3: &str, numeric: &str, m: &ExportMatrix| -> String {
        if m.country_index(iso3).is_some() {
            iso3.to_string()
        } else {
            numeric.to_string()
        }
    };

    let mut ms = BTreeMap::new();
    let mut phis = Vec::new();
    let mut union: std::collections::BTreeSet<String> = Default::default();
    for (&year, x) in &matrices {
        let r = rca(x).unwrap();
        let m = binarize(&r, 1.0).unwrap();
        union.extend(m.products.iter().cloned());
        phis.push(proximity(&m));
        ms.insert(year, (r, m));
    }
    let union: Vec<String> = union.into_iter().collect();
    let aligned: Vec<ProximityMatrix> = phis.iter().map(|p| p.aligned_to(&union).unwrap()).collect();
    let phi = prodspace::metrics::average_proximity(&aligned).unwrap();

    let x2005 = &matrices[&2005];
    let (r2005, m2005) = &ms[&2005];
    let kenya = resolve("KEN", "404", x2005);

    let shares = export_shares(x2005, &kenya).unwrap();
    let tea = shares
        .values[x2005.product_index("090240").expect("090240 missing")];
    assert!(
        (tea - 0.1460).abs() <= 0.0005,
        "Kenya 090240 share 2005 = {:.4}%, want 14.60% +/- 0.05pp",
        tea * 100.0
    );

    let tea_rca = r2005.row(&kenya).unwrap()[r2005.product_index("090240").unwrap()];
    assert!(
        (tea_rca - 835.0).abs() <= 835.0 * 0.02,
        "Kenya 090240 RCA 2005 = {tea_rca:.1}, want 835 +/- 2%"
    );

    let r_aligned = r2005.aligned_to(&phi.products).unwrap();
    let m_aligned = m2005.aligned_to(&phi.products).unwrap();
    let kenya_row = m_aligned.country_index(&kenya).unwrap();
    let dens = density(&kenya, m_aligned.row_bits(kenya_row), &phi).unwrap();
    let kenya_rca = r_aligned.row(&kenya).unwrap();
    let mut top: Option<(usize, f64)> = None;
    for (p, &rca_p) in kenya_rca.iter().enumerate() {
        if rca_p < 0.1 && !dens.isolated[p] && top.is_none_or(|(_, best)| dens.values[p] > best) {
            top = Some((p, dens.values[p]));
        }
    }
    let (top_idx, top_density) = top.expect("no opportunity candidates");
    assert_eq!(
        phi.products[top_idx], "071490",
        "Kenya top opportunity is {} at density {top_density:.4}",
        phi.products[top_idx]
    );
    assert!(
        (top_density - 0.1659).abs() <= 0.1659 * 0.05,
        "071490 density = {top_density:.4}, want 0.1659 +/- 5%"
    );

    let members: Vec<String> = [
        ("KEN", "404"),
        ("MOZ", "508"),
        ("RWA", "646"),
        ("TZA", "834"),
        ("ZMB", "894"),
    ]
    .iter()
    .map(|(iso3, num)| resolve(iso3, num, x2005))
    .collect();
    let spec = ScenarioSpec {
        label: "region".to_string(),
        members: members.clone(),
        mode: ScenarioMode::MaxRca,
        candidate_cutoff: 0.5,
        top_n: 150,
    };
    let result = run_scenario(&spec, x2005, &r_aligned, &m_aligned, &phi).unwrap();

    let moz = resolve("MOZ", "508", x2005);
    let moz_member = result
        .members
        .iter()
        .find(|m| m.country == moz)
        .expect("Mozambique missing from scenario");
    assert_eq!(
        moz_member.ranking[0].product, "130214",
        "Mozambique top gain is {}",
        moz_member.ranking[0].product
    );

    let rwanda = resolve("RWA", "646", x2005);
    for member in &result.members {
        if member.country == rwanda {
            continue;
        }
        assert!(
            member.sectors.agriculture_and_food > 0.5,
            "{}: agriculture fraction {:.3} of top gains",
            member.country,
            member.sectors.agriculture_and_food
        );
    }

    let soph = sophistication(m2005, 18).unwrap();
    let mut ours = Vec::new();
    let mut published = Vec::new();
    for (code, value) in KENYA_TOP30_SOPHISTICATION {
        if let Some(v) = soph.value(code) {
            ours.push(v);
            published.push(value);
        }
    }
    assert!(ours.len() >= 25, "only {} of 30 products had a defined score", ours.len());
    let rho = spearman(&ours, &published);
    assert!(
        rho >= 0.8,
        "sophistication rank correlation {rho:.3} below 0.8"
    );
    println!(
        "full-data regression: share {:.2}%, rca {:.0}, top opportunity {} ({:.4}), spearman {:.3}",
        tea * 100.0,
        tea_rca,
        phi.products[top_idx],
        top_density,
        rho
    );
}
