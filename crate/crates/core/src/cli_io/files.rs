//! Monitor series, state snapshots and checkpoints on disk.
//!
//! Text outputs print doubles with 17 significant digits, which parse back
//! to the same bits. Raw snapshots store little-endian doubles verbatim.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::discretization::{Field, Grid};
use crate::error::{Error, Result};
use crate::monitors::{Barriers, CheckFlags, MonitorReport, MonitorState};
use crate::stepper::State;

const SCALAR_COLUMNS: [&str; 14] = [
    "t",
    "mass_c1",
    "mass_c2",
    "max_h",
    "max_tau",
    "M_h",
    "M_tau",
    "entropy_F",
    "dissipation_D",
    "dissipation_integral",
    "grad_h_sq",
    "grad_tau_sq",
    "c2_sq_integral",
    "ledger_residual",
];

fn series_header() -> String {
    let mut cols: Vec<String> = SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.push("floor_engaged".into());
    cols.extend(CheckFlags::NAMES.iter().map(|n| format!("flag_{n}")));
    cols.join(",")
}

fn scalars(r: &MonitorReport) -> [f64; 14] {
    [
        r.t,
        r.mass_c1,
        r.mass_c2,
        r.max_h,
        r.max_tau,
        r.m_h,
        r.m_tau,
        r.entropy_f,
        r.dissipation_d,
        r.dissipation_integral,
        r.grad_h_sq,
        r.grad_tau_sq,
        r.c2_sq_integral,
        r.ledger_residual,
    ]
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// One CSV row per report under a fixed header.
pub fn write_series(reports: &[MonitorReport], path: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Format("refusing to write an empty series".into()));
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", series_header()).map_err(io)?;
    for r in reports {
        let mut fields: Vec<String> = scalars(r).iter().map(|v| format!("{v:.16e}")).collect();
        fields.push((r.floor_engaged as u8).to_string());
        fields.extend(r.flags.as_array().iter().map(|&f| (f as u8).to_string()));
        writeln!(w, "{}", fields.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn parse_flag(s: &str, line: usize) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::Parse {
            line,
            message: format!("expected 0 or 1, got {s:?}"),
        }),
    }
}

pub fn read_series(path: &Path) -> Result<Vec<MonitorReport>> {
    let mut lines = open(path)?.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: missing header", path.display())))?
        .map_err(|e| Error::io(path, e))?;
    if header.trim() != series_header() {
        return Err(Error::Format(format!("{}: unexpected series header", path.display())));
    }
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.trim().split(',').collect();
        if cells.len() != SCALAR_COLUMNS.len() + 1 + CheckFlags::NAMES.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} columns, got {}", SCALAR_COLUMNS.len() + 10, cells.len()),
            });
        }
        let mut v = [0.0; 14];
        for (slot, s) in v.iter_mut().zip(&cells) {
            *slot = s.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("not a number: {s:?}"),
            })?;
        }
        let mut flags = [false; 9];
        for (slot, s) in flags.iter_mut().zip(&cells[15..]) {
            *slot = parse_flag(s, line_no)?;
        }
        out.push(MonitorReport {
            t: v[0],
            mass_c1: v[1],
            mass_c2: v[2],
            max_h: v[3],
            max_tau: v[4],
            m_h: v[5],
            m_tau: v[6],
            entropy_f: v[7],
            dissipation_d: v[8],
            dissipation_integral: v[9],
            grad_h_sq: v[10],
            grad_tau_sq: v[11],
            c2_sq_integral: v[12],
            ledger_residual: v[13],
            floor_engaged: parse_flag(cells[14], line_no)?,
            flags: CheckFlags::from_array(flags),
        });
    }
    Ok(out)
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"HFVSNAP1";
const CHECKPOINT_MAGIC: &[u8; 8] = b"HFVCKPT1";
const SPECIES: [&str; 4] = ["c1", "c2", "h", "tau"];

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn encode_state(buf: &mut Vec<u8>, s: &State) {
    let g = s.grid();
    put_u64(buf, g.dim() as u64);
    put_u64(buf, g.nx() as u64);
    put_u64(buf, g.ny() as u64);
    put_f64(buf, g.lengths()[0]);
    put_f64(buf, g.lengths().get(1).copied().unwrap_or(1.0));
    put_f64(buf, s.t);
    for (_, f) in s.fields() {
        for &v in f.values() {
            put_f64(buf, v);
        }
    }
}

/// Cursor over a byte buffer that names what it was reading when it ran out.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, section: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format(format!("truncated file: missing section `{section}`")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self, section: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, section)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, section: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, section)?.try_into().expect("8 bytes")))
    }
}

fn grid_from_header(dim: u64, nx: u64, ny: u64, lx: f64, ly: f64) -> Result<Grid> {
    match dim {
        1 => Grid::line(nx as usize, lx),
        2 => Grid::rect(nx as usize, ny as usize, lx, ly),
        _ => Err(Error::Format(format!("unsupported dimension {dim}"))),
    }
}

fn decode_state(r: &mut Reader) -> Result<State> {
    let dim = r.u64("header")?;
    let nx = r.u64("header")?;
    let ny = r.u64("header")?;
    let lx = r.f64("header")?;
    let ly = r.f64("header")?;
    let t = r.f64("header")?;
    let grid = grid_from_header(dim, nx, ny, lx, ly)?;
    let mut fields = Vec::with_capacity(4);
    for name in SPECIES {
        let raw = r.take(8 * grid.len(), name)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        fields.push(Field::from_values(grid, values)?);
    }
    let [c1, c2, h, tau]: [Field; 4] = fields.try_into().expect("four species");
    State::new(c1, c2, h, tau, t)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Raw little-endian when the extension is not `.csv`, text otherwise.
pub fn write_snapshot(s: &State, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    if is_csv(path) {
        let g = s.grid();
        writeln!(w, "dim,nx,ny,lx,ly,t").map_err(io)?;
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            g.dim(),
            g.nx(),
            g.ny(),
            g.lengths()[0],
            g.lengths().get(1).copied().unwrap_or(1.0),
            s.t
        )
        .map_err(io)?;
        writeln!(w, "c1,c2,h,tau").map_err(io)?;
        for k in 0..g.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                s.c1.values()[k],
                s.c2.values()[k],
                s.h.values()[k],
                s.tau.values()[k]
            )
            .map_err(io)?;
        }
    } else {
        let mut buf = SNAPSHOT_MAGIC.to_vec();
        encode_state(&mut buf, s);
        w.write_all(&buf).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn read_csv_snapshot(path: &Path) -> Result<State> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let missing = |section: &str| Error::Format(format!("truncated file: missing section `{section}`"));
    let num = |s: &str, line: usize| -> Result<f64> {
        s.trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("not a number: {s:?}"),
        })
    };
    if lines.next().map(str::trim) != Some("dim,nx,ny,lx,ly,t") {
        return Err(missing("header"));
    }
    let head: Vec<&str> = lines.next().ok_or_else(|| missing("header"))?.split(',').collect();
    if head.len() != 6 {
        return Err(Error::Parse {
            line: 2,
            message: "expected 6 header values".into(),
        });
    }
    let int = |s: &str| -> Result<u64> {
        s.trim().parse().map_err(|_| Error::Parse {
            line: 2,
            message: format!("not an integer: {s:?}"),
        })
    };
    let grid = grid_from_header(int(head[0])?, int(head[1])?, int(head[2])?, num(head[3], 2)?, num(head[4], 2)?)?;
    let t = num(head[5], 2)?;
    if lines.next().map(str::trim) != Some("c1,c2,h,tau") {
        return Err(missing("fields"));
    }
    let mut cols: [Vec<f64>; 4] = Default::default();
    for k in 0..grid.len() {
        let line = lines.next().ok_or_else(|| missing("fields"))?;
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 4 {
            return Err(Error::Parse {
                line: k + 4,
                message: "expected 4 values".into(),
            });
        }
        for (col, v) in cols.iter_mut().zip(vals) {
            col.push(num(v, k + 4)?);
        }
    }
    let [c1, c2, h, tau] = cols.map(|v| Field::from_values(grid, v));
    State::new(c1?, c2?, h?, tau?, t)
}

pub fn read_snapshot(path: &Path) -> Result<State> {
    if is_csv(path) {
        return read_csv_snapshot(path);
    }
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(8, "magic")? != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("{}: not a snapshot file", path.display())));
    }
    decode_state(&mut r)
}

/// State plus restartable monitor data, tied to one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// Hex SHA-256 of the configuration that produced the state.
    pub config_hash: String,
    pub state: State,
    pub monitor: MonitorState,
}

pub fn write_checkpoint(c: &Checkpoint, path: &Path) -> Result<()> {
    let hash = hex::decode(&c.config_hash).map_err(|e| Error::Format(format!("bad config hash: {e}")))?;
    let mut buf = CHECKPOINT_MAGIC.to_vec();
    put_u64(&mut buf, hash.len() as u64);
    buf.extend_from_slice(&hash);
    encode_state(&mut buf, &c.state);
    let m = &c.monitor;
    for v in [
        m.barriers.m_h,
        m.barriers.m_tau,
        m.initial_mass,
        m.dissipation_integral,
        m.c2_sq_integral,
        m.last_reported_dissipation,
        m.last_reported_c2_sq,
        m.ledger_worst,
    ] {
        put_f64(&mut buf, v);
    }
    put_u64(&mut buf, m.next_report);
    buf.push(m.ledger_ok as u8);
    buf.push(m.floor_engaged as u8);
    let mut w = create(path)?;
    w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("{}: not a checkpoint file", path.display())));
    }
    let n = r.u64("config hash")? as usize;
    let config_hash = hex::encode(r.take(n, "config hash")?);
    let state = decode_state(&mut r)?;
    let mut v = [0.0; 8];
    for slot in v.iter_mut() {
        *slot = r.f64("monitor")?;
    }
    let next_report = r.u64("monitor")?;
    let flags = r.take(2, "monitor")?;
    Ok(Checkpoint {
        config_hash,
        state,
        monitor: MonitorState {
            barriers: Barriers { m_h: v[0], m_tau: v[1] },
            initial_mass: v[2],
            dissipation_integral: v[3],
            c2_sq_integral: v[4],
            last_reported_dissipation: v[5],
            last_reported_c2_sq: v[6],
            ledger_worst: v[7],
            next_report,
            ledger_ok: flags[0] != 0,
            floor_engaged: flags[1] != 0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_state(grid: Grid, seed: u64) -> State {
        let mut x = seed | 1;
        let mut rnd = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 * 3.7
        };
        let mut s = State::uniform(grid, 0.0, 0.0, 0.0, 0.0);
        for f in [&mut s.c1, &mut s.c2, &mut s.h, &mut s.tau] {
            f.values_mut().iter_mut().for_each(|v| *v = rnd());
        }
        s.t = 0.123456789;
        s
    }

    #[test]
    fn raw_snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (i, g) in [Grid::line(17, 1.3).unwrap(), Grid::rect(9, 6, 0.7, 2.0).unwrap()].into_iter().enumerate() {
            let s = random_state(g, 99 + i as u64);
            let path = dir.path().join("s.bin");
            write_snapshot(&s, &path).unwrap();
            assert_eq!(read_snapshot(&path).unwrap(), s);
        }
    }

    #[test]
    fn csv_snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = random_state(Grid::rect(5, 4, 1.0, 1.0).unwrap(), 7);
        let path = dir.path().join("s.csv");
        write_snapshot(&s, &path).unwrap();
        let back = read_snapshot(&path).unwrap();
        // 17 significant digits reproduce every double.
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_snapshots_name_the_missing_section() {
        let dir = tempfile::tempdir().unwrap();
        let s = random_state(Grid::line(8, 1.0).unwrap(), 3);
        let bin = dir.path().join("s.bin");
        write_snapshot(&s, &bin).unwrap();
        let bytes = fs::read(&bin).unwrap();
        fs::write(&bin, &bytes[..8 + 48]).unwrap();
        let msg = read_snapshot(&bin).unwrap_err().to_string();
        assert!(msg.contains("missing section `c1`"), "{msg}");

        let csv = dir.path().join("s.csv");
        write_snapshot(&s, &csv).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        let head: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        fs::write(&csv, head).unwrap();
        let msg = read_snapshot(&csv).unwrap_err().to_string();
        assert!(msg.contains("missing section `fields`"), "{msg}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = Checkpoint {
            config_hash: "00ff10".repeat(4),
            state: random_state(Grid::rect(4, 5, 1.0, 1.0).unwrap(), 11),
            monitor: MonitorState {
                barriers: Barriers { m_h: 2.5, m_tau: 3.25 },
                initial_mass: 0.7,
                next_report: 17,
                dissipation_integral: 0.1,
                c2_sq_integral: 0.2,
                last_reported_dissipation: 0.09,
                last_reported_c2_sq: 0.19,
                ledger_worst: -1e-9,
                ledger_ok: true,
                floor_engaged: false,
            },
        };
        let path = dir.path().join("c.ckpt");
        write_checkpoint(&c, &path).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), c);
    }
}
