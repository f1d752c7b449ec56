//! Little-endian binary containers for grid functions, frames and DFD
//! systems.
//!
//! Every file starts with the magic `DFDR`, a format version (`u16`) and a
//! kind byte. Grids are stored as `n: u64, length: f64`; complex values as
//! `re, im` pairs of `f64`. Frames carry their labels, subspace mask,
//! recorded bounds, tight constant, minimality flag, truncation text and
//! the sparse spectrum of every element.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::dfd::DfdSystem;
use crate::error::{Error, Result};
use crate::frames::{Frame, FrameBounds, IndexSet, Label, SparseSpectrum};
use crate::grid::{Grid, GridFunction, Subspace};

pub const MAGIC: [u8; 4] = *b"DFDR";
pub const VERSION: u16 = 1;

/// Refuse counts beyond this when reading, before allocating.
const MAX_COUNT: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    GridFunction = 1,
    Frame = 2,
    System = 3,
}

impl Kind {
    fn from_u8(b: u8) -> Result<Self> {
        match b {
            1 => Ok(Kind::GridFunction),
            2 => Ok(Kind::Frame),
            3 => Ok(Kind::System),
            _ => Err(Error::Format(format!("unknown container kind {b}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Container {
    GridFunction(GridFunction),
    Frame(Frame),
    System(DfdSystem),
}

impl Container {
    pub fn kind(&self) -> Kind {
        match self {
            Container::GridFunction(_) => Kind::GridFunction,
            Container::Frame(_) => Kind::Frame,
            Container::System(_) => Kind::System,
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_u16::<LE>(VERSION)?;
        w.write_u8(self.kind() as u8)?;
        match self {
            Container::GridFunction(x) => write_grid_function(w, x),
            Container::Frame(f) => write_frame(w, f),
            Container::System(s) => {
                write_frame(w, s.u())?;
                write_frame(w, s.v())?;
                write_f64s(w, s.kappa())
            }
        }
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(eof)?;
        if magic != MAGIC {
            return Err(Error::Format("not a DFDR container".into()));
        }
        let version = r.read_u16::<LE>().map_err(eof)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let out = match Kind::from_u8(r.read_u8().map_err(eof)?)? {
            Kind::GridFunction => Container::GridFunction(read_grid_function(r)?),
            Kind::Frame => Container::Frame(read_frame(r)?),
            Kind::System => {
                let u = read_frame(r)?;
                let v = read_frame(r)?;
                let kappa = read_f64s(r)?;
                Container::System(DfdSystem::new(u, v, kappa)?)
            }
        };
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after container body".into()));
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

pub fn load_grid_function(path: &Path) -> Result<GridFunction> {
    match Container::load(path)? {
        Container::GridFunction(x) => Ok(x),
        other => Err(Error::Format(format!("expected a grid function, found {:?}", other.kind()))),
    }
}

pub fn load_frame(path: &Path) -> Result<Frame> {
    match Container::load(path)? {
        Container::Frame(f) => Ok(f),
        other => Err(Error::Format(format!("expected a frame, found {:?}", other.kind()))),
    }
}

pub fn load_system(path: &Path) -> Result<DfdSystem> {
    match Container::load(path)? {
        Container::System(s) => Ok(s),
        other => Err(Error::Format(format!("expected a DFD system, found {:?}", other.kind()))),
    }
}

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated container".into())
    } else {
        Error::Io(e)
    }
}

fn read_count<R: Read>(r: &mut R) -> Result<usize> {
    let c = r.read_u64::<LE>().map_err(eof)?;
    if c > MAX_COUNT {
        return Err(Error::Format(format!("count {c} exceeds the container limit")));
    }
    Ok(c as usize)
}

fn write_grid<W: Write>(w: &mut W, g: &Grid) -> Result<()> {
    w.write_u64::<LE>(g.n() as u64)?;
    w.write_f64::<LE>(g.length())?;
    Ok(())
}

fn read_grid<R: Read>(r: &mut R) -> Result<Grid> {
    let n = read_count(r)?;
    let length = r.read_f64::<LE>().map_err(eof)?;
    Grid::new(n, length).map_err(|e| Error::Format(e.to_string()))
}

fn write_complex<W: Write>(w: &mut W, c: &[Complex64]) -> Result<()> {
    for z in c {
        w.write_f64::<LE>(z.re)?;
        w.write_f64::<LE>(z.im)?;
    }
    Ok(())
}

fn read_complex<R: Read>(r: &mut R, count: usize) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re = r.read_f64::<LE>().map_err(eof)?;
        let im = r.read_f64::<LE>().map_err(eof)?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

fn write_f64s<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    w.write_u64::<LE>(v.len() as u64)?;
    for x in v {
        w.write_f64::<LE>(*x)?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let count = read_count(r)?;
    (0..count).map(|_| r.read_f64::<LE>().map_err(eof)).collect()
}

fn write_grid_function<W: Write>(w: &mut W, x: &GridFunction) -> Result<()> {
    write_grid(w, x.grid())?;
    write_complex(w, x.samples())
}

fn read_grid_function<R: Read>(r: &mut R) -> Result<GridFunction> {
    let grid = read_grid(r)?;
    let samples = read_complex(r, grid.n())?;
    GridFunction::new(grid, samples)
}

fn write_opt_f64<W: Write>(w: &mut W, v: Option<f64>) -> Result<()> {
    w.write_u8(v.is_some() as u8)?;
    w.write_f64::<LE>(v.unwrap_or(0.0))?;
    Ok(())
}

fn read_opt_f64<R: Read>(r: &mut R) -> Result<Option<f64>> {
    let flag = r.read_u8().map_err(eof)?;
    let v = r.read_f64::<LE>().map_err(eof)?;
    Ok((flag != 0).then_some(v))
}

fn write_frame<W: Write>(w: &mut W, f: &Frame) -> Result<()> {
    let grid = f.grid();
    write_grid(w, grid)?;
    match f.subspace() {
        Subspace::Full => w.write_u8(0)?,
        Subspace::Mask(mask) => {
            w.write_u8(1)?;
            w.write_all(&mask.iter().map(|&b| b as u8).collect::<Vec<_>>())?;
        }
    }
    let labels = f.labels();
    w.write_u32::<LE>(f.index_set().arity() as u32)?;
    w.write_u64::<LE>(labels.len() as u64)?;
    for l in labels {
        for &c in &l.0 {
            w.write_i32::<LE>(c)?;
        }
    }
    let b = f.bounds();
    write_opt_f64(w, b.map(|b| b.lower))?;
    write_opt_f64(w, b.map(|b| b.upper))?;
    write_opt_f64(w, f.tight_constant())?;
    w.write_u8(match f.minimal() {
        None => 0,
        Some(false) => 1,
        Some(true) => 2,
    })?;
    let t = f.truncation().as_bytes();
    w.write_u64::<LE>(t.len() as u64)?;
    w.write_all(t)?;
    for e in f.elements() {
        w.write_u64::<LE>(e.nnz() as u64)?;
        for &i in &e.indices {
            w.write_u32::<LE>(i)?;
        }
        write_complex(w, &e.values)?;
    }
    Ok(())
}

fn read_frame<R: Read>(r: &mut R) -> Result<Frame> {
    let grid = read_grid(r)?;
    let subspace = match r.read_u8().map_err(eof)? {
        0 => Subspace::Full,
        1 => {
            let mut bytes = vec![0u8; grid.n()];
            r.read_exact(&mut bytes).map_err(eof)?;
            Subspace::Mask(bytes.into_iter().map(|b| b != 0).collect())
        }
        t => return Err(Error::Format(format!("unknown subspace tag {t}"))),
    };
    let arity = r.read_u32::<LE>().map_err(eof)? as usize;
    let count = read_count(r)?;
    if arity as u64 * count as u64 > MAX_COUNT {
        return Err(Error::Format("label table exceeds the container limit".into()));
    }
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let l = (0..arity).map(|_| r.read_i32::<LE>().map_err(eof)).collect::<Result<Vec<_>>>()?;
        labels.push(Label(l));
    }
    let lower = read_opt_f64(r)?;
    let upper = read_opt_f64(r)?;
    let tight = read_opt_f64(r)?;
    let minimal = match r.read_u8().map_err(eof)? {
        0 => None,
        1 => Some(false),
        2 => Some(true),
        t => return Err(Error::Format(format!("unknown minimality tag {t}"))),
    };
    let tlen = read_count(r)?;
    let mut tbytes = vec![0u8; tlen];
    r.read_exact(&mut tbytes).map_err(eof)?;
    let truncation = String::from_utf8(tbytes).map_err(|e| Error::Format(e.to_string()))?;
    let mut elements = Vec::with_capacity(count);
    for _ in 0..count {
        let nnz = read_count(r)?;
        if nnz > grid.n() {
            return Err(Error::Format(format!("element with {nnz} entries on a grid of {}", grid.n())));
        }
        let indices = (0..nnz).map(|_| r.read_u32::<LE>().map_err(eof)).collect::<Result<Vec<_>>>()?;
        let values = read_complex(r, nnz)?;
        elements.push(SparseSpectrum { indices, values });
    }

    let mut f = Frame::new(grid, IndexSet::new(labels)?, elements, subspace)?;
    if let Some(c) = tight {
        f = f.with_tight_constant(c)?;
    }
    match (lower, upper) {
        (Some(lower), Some(upper)) => f = f.with_bounds(FrameBounds { lower, upper }),
        (None, None) => {}
        _ => return Err(Error::Format("frame bounds recorded on one side only".into())),
    }
    Ok(f.with_minimal(minimal).with_truncation(truncation))
}
