use std::time::Instant;

use zerosum::instance::{Generator, InstanceSpec};
use zerosum::oracle::enumerate_subsums;
use zerosum::pipeline::{find_zero_sum, PipelineConfig};
use zerosum::Error;

use crate::Global;

pub const HEADER: [&str; 8] = ["suite", "p", "d", "size", "seed", "stage", "ms", "result"];

struct Case {
    suite: &'static str,
    p: u32,
    d: usize,
    size: usize,
    seed: u64,
}

fn grid(suite: &str, seed: u64) -> Result<Vec<Case>, Error> {
    let dp = |s| (0..3).map(move |i| Case { suite: "dp", p: 11, d: 2, size: 100, seed: s + i });
    let large = |s| std::iter::once(Case { suite: "dp-large", p: 1009, d: 2, size: 1000, seed: s });
    let pipe = |s| (0..3).map(move |i| Case { suite: "pipeline", p: 31, d: 2, size: 450, seed: s + i });
    Ok(match suite {
        "empty" => Vec::new(),
        "dp" => dp(seed).collect(),
        "dp-large" => large(seed).collect(),
        "pipeline" => pipe(seed).collect(),
        "all" => dp(seed).chain(large(seed)).chain(pipe(seed)).collect(),
        other => return Err(Error::InvalidParams(format!("unknown bench suite {other:?}"))),
    })
}

fn row(w: &mut csv::Writer<Vec<u8>>, c: &Case, stage: &str, ms: f64, result: &str) -> Result<(), Error> {
    let fields = [c.suite.to_string(), c.p.to_string(), c.d.to_string(), c.size.to_string(), c.seed.to_string(), stage.into(), format!("{ms:.3}"), result.into()];
    w.write_record(&fields).map_err(|e| Error::Internal(e.to_string()))
}

pub fn run(suite: &str, global: &Global) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).map_err(|e| Error::Internal(e.to_string()))?;
    for c in grid(suite, global.seed)? {
        let spec = InstanceSpec { p: c.p, d: c.d, seed: c.seed, generator: Generator::RandomCloud { size: c.size, include_zero: false }, multiset: false };
        let inst = spec.generate()?;
        let params = inst.params()?;
        let x = inst.multiset();
        if c.suite == "pipeline" {
            let cfg = PipelineConfig { seed: c.seed, record_timings: true, ..Default::default() };
            let start = Instant::now();
            let run = find_zero_sum(&params, &x, &cfg)?;
            let total = start.elapsed().as_secs_f64() * 1e3;
            let outcome = match &run.failure {
                None => "certificate".to_string(),
                Some(f) => format!("failure@{}", f.number),
            };
            for (stage, ms) in run.trace.timings_ms.iter().flatten() {
                row(&mut w, &c, &format!("{stage:?}").to_lowercase(), *ms, &outcome)?;
            }
            row(&mut w, &c, "total", total, &outcome)?;
        } else {
            let start = Instant::now();
            let table = enumerate_subsums(&params, &x)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            row(&mut w, &c, "subsums", ms, &format!("reachable={}", table.len()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}
