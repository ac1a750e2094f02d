use std::path::Path;

use super::config::Mode;
use crate::error::{MxtError, Result};
use crate::geometry::LensRecord;
use crate::media::{Field, V3};
use crate::reconstruct::{BoundarySymbolSample, PipelineData};
use crate::transforms::{AcquisitionSet, RayDatum, NPOL};

pub const FORMAT_VERSION: &str = "mxt-dataset v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Metadata {
    pub version: String,
    pub phantom: String,
    pub mode: Mode,
    pub noise: f64,
    pub seed: u64,
    /// Longest travel time in the acquisition (the observation time must
    /// exceed it).
    pub max_time: f64,
    pub levels: Vec<f64>,
    pub eps_ref: f64,
    pub warnings: Vec<String>,
}

/// Synthetic or measured data; every table row carries the id of its ray in
/// `acquisition`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub acquisition: AcquisitionSet,
    pub symbols: Vec<BoundarySymbolSample>,
    pub lens: Vec<(usize, LensRecord)>,
    pub attenuation: Vec<(usize, f64)>,
    pub trt: Vec<(usize, [f64; NPOL])>,
    pub meta: Metadata,
}

/// 17 significant digits: exact round trip through text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> MxtError {
    MxtError::Format(e.to_string())
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let h: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if h != header {
        return Err(MxtError::Format(format!("{}: unexpected header {h:?}", path.display())));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            rec.iter()
                .map(|s| s.parse::<f64>().map_err(|e| MxtError::Format(format!("{}: `{s}`: {e}", path.display()))))
                .collect()
        })
        .collect()
}

fn v3s(v: &V3) -> [String; 3] {
    [fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)]
}

fn id_of(v: f64, n: usize) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && (v as usize) < n {
        Ok(v as usize)
    } else {
        Err(MxtError::Format(format!("ray id {v} not in acquisition of {n} rays")))
    }
}

const ACQ: [&str; 10] = ["id", "x", "y", "z", "dx", "dy", "dz", "sx", "sy", "sz"];
const SYM: [&str; 6] = ["x", "y", "z", "rho", "s0", "s1"];
const LENS: [&str; 14] = ["id", "x_in", "y_in", "z_in", "vx_in", "vy_in", "vz_in", "x_out", "y_out", "z_out", "vx_out", "vy_out", "vz_out", "tau"];
const ATT: [&str; 2] = ["id", "minus_2_log_i"];
const TRT: [&str; 4] = ["id", "eta", "zeta", "diag"];

impl Metadata {
    pub fn to_text(&self) -> String {
        let levels: Vec<String> = self.levels.iter().map(|v| v.to_string()).collect();
        let mut s = String::new();
        s += &format!("version = {}\n", self.version);
        s += &format!("phantom = {}\n", self.phantom);
        s += &format!("mode = {}\n", if self.mode == Mode::Slice { "slice" } else { "volume" });
        s += &format!("noise = {}\n", fmt_f64(self.noise));
        s += &format!("seed = {}\n", self.seed);
        s += &format!("max_time = {}\n", fmt_f64(self.max_time));
        s += &format!("levels = {}\n", levels.join(","));
        s += &format!("eps_ref = {}\n", fmt_f64(self.eps_ref));
        for w in &self.warnings {
            s += &format!("warning = {w}\n");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Metadata {
            version: String::new(),
            phantom: String::new(),
            mode: Mode::Slice,
            noise: 0.0,
            seed: 0,
            max_time: 0.0,
            levels: vec![],
            eps_ref: 1.0,
            warnings: vec![],
        };
        let bad = |k: &str, v: &str| MxtError::Format(format!("metadata {k} = {v}"));
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| MxtError::Format(format!("metadata line `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "version" => m.version = v.into(),
                "phantom" => m.phantom = v.into(),
                "mode" => {
                    m.mode = match v {
                        "slice" => Mode::Slice,
                        "volume" => Mode::Volume,
                        _ => return Err(bad(k, v)),
                    }
                }
                "noise" => m.noise = v.parse().map_err(|_| bad(k, v))?,
                "seed" => m.seed = v.parse().map_err(|_| bad(k, v))?,
                "max_time" => m.max_time = v.parse().map_err(|_| bad(k, v))?,
                "levels" => {
                    m.levels = if v.is_empty() {
                        vec![]
                    } else {
                        v.split(',').map(|s| s.trim().parse().map_err(|_| bad(k, v))).collect::<Result<_>>()?
                    }
                }
                "eps_ref" => m.eps_ref = v.parse().map_err(|_| bad(k, v))?,
                "warning" => m.warnings.push(v.into()),
                _ => return Err(MxtError::Format(format!("unknown metadata key `{k}`"))),
            }
        }
        if m.version != FORMAT_VERSION {
            return Err(MxtError::Format(format!("dataset version `{}`, expected `{FORMAT_VERSION}`", m.version)));
        }
        Ok(m)
    }
}

impl Dataset {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metadata.txt"), self.meta.to_text())?;
        let a = &self.acquisition;
        write_table(
            &dir.join("acquisition.csv"),
            &ACQ,
            (0..a.len()).map(|k| {
                let (x, d) = &a.entries[k];
                let mut r = vec![k.to_string()];
                r.extend(v3s(x));
                r.extend(v3s(d));
                r.extend(v3s(&a.seeds[k]));
                r
            }),
        )?;
        write_table(
            &dir.join("boundary_symbols.csv"),
            &SYM,
            self.symbols.iter().map(|s| {
                let mut r = v3s(&s.x0).to_vec();
                r.extend([fmt_f64(s.rho), fmt_f64(s.s0), fmt_f64(s.s1)]);
                r
            }),
        )?;
        write_table(
            &dir.join("lens.csv"),
            &LENS,
            self.lens.iter().map(|(id, l)| {
                let mut r = vec![id.to_string()];
                for v in [&l.x_in, &l.v_in, &l.x_out, &l.v_out] {
                    r.extend(v3s(v));
                }
                r.push(fmt_f64(l.tau));
                r
            }),
        )?;
        write_table(&dir.join("attenuation.csv"), &ATT, self.attenuation.iter().map(|(id, v)| vec![id.to_string(), fmt_f64(*v)]))?;
        write_table(
            &dir.join("trt.csv"),
            &TRT,
            self.trt.iter().map(|(id, d)| {
                let mut r = vec![id.to_string()];
                r.extend(d.iter().map(|v| fmt_f64(*v)));
                r
            }),
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = Metadata::parse(&std::fs::read_to_string(dir.join("metadata.txt"))?)?;
        let v = |r: &[f64], i: usize| V3::new(r[i], r[i + 1], r[i + 2]);
        let mut acquisition = AcquisitionSet { entries: vec![], seeds: vec![] };
        for (k, r) in read_table(&dir.join("acquisition.csv"), &ACQ)?.iter().enumerate() {
            if id_of(r[0], usize::MAX)? != k {
                return Err(MxtError::Format(format!("acquisition row {k} has id {}", r[0])));
            }
            acquisition.entries.push((v(r, 1), v(r, 4)));
            acquisition.seeds.push(v(r, 7));
        }
        let n = acquisition.len();
        let symbols = read_table(&dir.join("boundary_symbols.csv"), &SYM)?
            .iter()
            .map(|r| BoundarySymbolSample { x0: v(r, 0), rho: r[3], s0: r[4], s1: r[5] })
            .collect();
        let lens = read_table(&dir.join("lens.csv"), &LENS)?
            .iter()
            .map(|r| Ok((id_of(r[0], n)?, LensRecord { x_in: v(r, 1), v_in: v(r, 4), x_out: v(r, 7), v_out: v(r, 10), tau: r[13] })))
            .collect::<Result<_>>()?;
        let attenuation = read_table(&dir.join("attenuation.csv"), &ATT)?
            .iter()
            .map(|r| Ok((id_of(r[0], n)?, r[1])))
            .collect::<Result<_>>()?;
        let trt = read_table(&dir.join("trt.csv"), &TRT)?
            .iter()
            .map(|r| Ok((id_of(r[0], n)?, [r[1], r[2], r[3]])))
            .collect::<Result<_>>()?;
        let ds = Dataset { acquisition, symbols, lens, attenuation, trt, meta };
        ds.check()?;
        Ok(ds)
    }

    /// Per-ray tables must list the same rays in the same order.
    pub fn check(&self) -> Result<()> {
        let ids: Vec<usize> = self.lens.iter().map(|r| r.0).collect();
        if self.attenuation.iter().map(|r| r.0).ne(ids.iter().copied()) || self.trt.iter().map(|r| r.0).ne(ids.iter().copied()) {
            return Err(MxtError::Format("lens, attenuation and trt tables list different rays".into()));
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= self.acquisition.len()) {
            return Err(MxtError::Format(format!("ray id {id} not in acquisition")));
        }
        Ok(())
    }

    /// Joined per-ray view of the lens, attenuation and transverse tables.
    pub fn ray_data(&self) -> Vec<RayDatum> {
        self.lens
            .iter()
            .zip(&self.attenuation)
            .zip(&self.trt)
            .map(|(((id, l), (_, a)), (_, t))| RayDatum {
                id: *id,
                tau: l.tau,
                log_attenuation: *a,
                trt: *t,
                seed: self.acquisition.seeds[*id],
            })
            .collect()
    }

    pub fn pipeline_data(&self) -> PipelineData {
        PipelineData {
            symbols: self.symbols.clone(),
            lens: self.lens.iter().map(|r| r.1).collect(),
            attenuation: self.attenuation.iter().map(|r| r.1).collect(),
            trt: self.trt.iter().map(|r| r.1).collect(),
            seeds: self.lens.iter().map(|r| self.acquisition.seeds[r.0]).collect(),
            eps_ref: Field::Constant(self.meta.eps_ref),
        }
    }
}
