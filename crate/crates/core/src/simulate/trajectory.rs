//! Trajectory records, summary statistics and the CSV exchange format.
//!
//! Columns: `t, q0.., v0.., x0.., c, h, phi, u0.., u_nom0.., mu0.., S, hdot,
//! in_C, in_C_eps`. Floats carry 17 significant digits so a file read back
//! reproduces every record bit-for-bit. `mu` in row `k` is the disturbance
//! held over `[t_k, t_{k+1})`.

use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub x: DVector<f64>,
    pub c: f64,
    pub h: f64,
    pub phi: f64,
    pub u: DVector<f64>,
    pub u_nom: DVector<f64>,
    pub mu: DVector<f64>,
    /// Storage `S = −h`.
    pub storage: f64,
    pub hdot: f64,
    pub in_c: bool,
    pub in_c_eps: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub records: Vec<SimRecord>,
    /// Hash of the scenario that produced the trajectory; absent when read from CSV.
    pub digest: Option<String>,
    /// Steps at which the baseline QP had no solution.
    pub infeasible_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub min_h: f64,
    pub min_c: f64,
    pub max_v_sq: f64,
    pub frac_in_c_eps: f64,
    pub peak_u_norm: f64,
    pub infeasible_count: usize,
}

impl Trajectory {
    pub fn dof(&self) -> usize {
        self.records.first().map_or(0, |r| r.q.len())
    }

    pub fn task_dim(&self) -> usize {
        self.records.first().map_or(0, |r| r.x.len())
    }

    pub fn summary(&self) -> Summary {
        let n = self.records.len();
        let fold = |f: fn(&SimRecord) -> f64, init: f64, op: fn(f64, f64) -> f64| {
            self.records.iter().map(f).fold(init, op)
        };
        Summary {
            records: n,
            min_h: fold(|r| r.h, f64::INFINITY, f64::min),
            min_c: fold(|r| r.c, f64::INFINITY, f64::min),
            max_v_sq: fold(|r| r.v.norm_squared(), 0.0, f64::max),
            frac_in_c_eps: if n == 0 {
                0.0
            } else {
                self.records.iter().filter(|r| r.in_c_eps).count() as f64 / n as f64
            },
            peak_u_norm: fold(|r| r.u.norm(), 0.0, f64::max),
            infeasible_count: self.infeasible_steps.len(),
        }
    }

    pub fn header(&self) -> String {
        csv_header(self.dof(), self.task_dim())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header())?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            push_float(&mut line, r.t);
            for block in [&r.q, &r.v, &r.x] {
                block.iter().for_each(|&x| push_float(&mut line, x));
            }
            for x in [r.c, r.h, r.phi] {
                push_float(&mut line, x);
            }
            for block in [&r.u, &r.u_nom, &r.mu] {
                block.iter().for_each(|&x| push_float(&mut line, x));
            }
            push_float(&mut line, r.storage);
            push_float(&mut line, r.hdot);
            line.push_str(if r.in_c { "1," } else { "0," });
            line.push_str(if r.in_c_eps { "1" } else { "0" });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, TrajectoryIoError> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(TrajectoryIoError::Empty),
        };
        let (n, d) = parse_header(header.trim())?;
        let width = 1 + 2 * n + d + 3 + 3 * n + 4;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != width {
                return Err(TrajectoryIoError::Malformed {
                    line: line_no,
                    reason: format!("expected {width} fields, found {}", fields.len()),
                });
            }
            let num = |j: usize| -> Result<f64, TrajectoryIoError> {
                fields[j].parse::<f64>().map_err(|e| TrajectoryIoError::Malformed {
                    line: line_no,
                    reason: format!("column {}: {e}", j + 1),
                })
            };
            let flag = |j: usize| -> Result<bool, TrajectoryIoError> {
                match fields[j] {
                    "1" => Ok(true),
                    "0" => Ok(false),
                    other => Err(TrajectoryIoError::Malformed {
                        line: line_no,
                        reason: format!("column {}: expected 0 or 1, found {other:?}", j + 1),
                    }),
                }
            };
            let vec = |start: usize, len: usize| -> Result<DVector<f64>, TrajectoryIoError> {
                let vals = (start..start + len).map(num).collect::<Result<Vec<_>, _>>()?;
                Ok(DVector::from_vec(vals))
            };
            let mut at = 1;
            let mut take = |len: usize| {
                let s = at;
                at += len;
                s
            };
            let (iq, iv, ix) = (take(n), take(n), take(d));
            let (ic, ih, iphi) = (take(1), take(1), take(1));
            let (iu, iun, imu) = (take(n), take(n), take(n));
            let (is, ihd, iin, iine) = (take(1), take(1), take(1), take(1));
            records.push(SimRecord {
                t: num(0)?,
                q: vec(iq, n)?,
                v: vec(iv, n)?,
                x: vec(ix, d)?,
                c: num(ic)?,
                h: num(ih)?,
                phi: num(iphi)?,
                u: vec(iu, n)?,
                u_nom: vec(iun, n)?,
                mu: vec(imu, n)?,
                storage: num(is)?,
                hdot: num(ihd)?,
                in_c: flag(iin)?,
                in_c_eps: flag(iine)?,
            });
        }
        if records.is_empty() {
            return Err(TrajectoryIoError::Empty);
        }
        Ok(Trajectory { records, digest: None, infeasible_steps: Vec::new() })
    }
}

fn push_float(line: &mut String, x: f64) {
    use std::fmt::Write as _;
    write!(line, "{x:.16e},").expect("writing to a String cannot fail");
}

pub fn csv_header(n: usize, d: usize) -> String {
    let mut cols = vec!["t".to_string()];
    let mut block = |prefix: &str, len: usize| (0..len).for_each(|i| cols.push(format!("{prefix}{i}")));
    block("q", n);
    block("v", n);
    block("x", d);
    cols.extend(["c", "h", "phi"].map(String::from));
    let mut block = |prefix: &str, len: usize| (0..len).for_each(|i| cols.push(format!("{prefix}{i}")));
    block("u", n);
    block("u_nom", n);
    block("mu", n);
    cols.extend(["S", "hdot", "in_C", "in_C_eps"].map(String::from));
    cols.join(",")
}

fn parse_header(header: &str) -> Result<(usize, usize), TrajectoryIoError> {
    let cols: Vec<&str> = header.split(',').collect();
    let count = |prefix: &str| {
        cols.iter()
            .filter(|c| c.strip_prefix(prefix).is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())))
            .count()
    };
    let (n, d) = (count("q"), count("x"));
    if n == 0 || csv_header(n, d) != header {
        return Err(TrajectoryIoError::BadHeader(header.chars().take(200).collect()));
    }
    Ok((n, d))
}

#[derive(Debug, Error)]
pub enum TrajectoryIoError {
    #[error("trajectory file is empty")]
    Empty,
    #[error("unrecognized trajectory header: {0}")]
    BadHeader(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records          = {}", self.records)?;
        writeln!(f, "min_h            = {:.6e}", self.min_h)?;
        writeln!(f, "min_c            = {:.6e}", self.min_c)?;
        writeln!(f, "max_v_sq         = {:.6e}", self.max_v_sq)?;
        writeln!(f, "frac_in_C_eps    = {:.6}", self.frac_in_c_eps)?;
        writeln!(f, "peak_u_norm      = {:.6e}", self.peak_u_norm)?;
        write!(f, "infeasible_count = {}", self.infeasible_count)
    }
}
