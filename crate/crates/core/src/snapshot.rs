//! Snapshot files: a short ASCII header followed by little-endian `f64`
//! samples.
//!
//! ```text
//! slabmhd-snapshot 1
//! dim 3
//! t 0.5
//! grid <lx> <ly> <delta> <nx> <ny> <nz> <sigma> <dealias>
//! parity even even odd
//! end
//! ```
//!
//! Slab files then hold the three components of `z₊` followed by those of
//! `z₋`, each in node order `(i·ny + j)·(nz+1) + k`. Planar files (`dim 2`,
//! no parity line) hold `z₊¹ z₊² z₋¹ z₋²` in order `i·ny + j`.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::fields::{ElsasserState, VectorField, VECTOR_PARITY};
use crate::grid::{GridSpec, Parity, ScalarField};
use crate::mhd2d::State2D;
use crate::scalar::Real;
use crate::spectral::Field2;

const MAGIC: &str = "slabmhd-snapshot 1";

fn write_header<T: Real>(w: &mut impl Write, dim: usize, t: T, spec: &GridSpec<T>) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "dim {dim}")?;
    writeln!(w, "t {:?}", t.to_f64_lossy())?;
    writeln!(
        w,
        "grid {:?} {:?} {:?} {} {} {} {:?} {}",
        spec.lx.to_f64_lossy(),
        spec.ly.to_f64_lossy(),
        spec.delta.to_f64_lossy(),
        spec.nx,
        spec.ny,
        spec.nz,
        spec.sigma.to_f64_lossy(),
        spec.dealias
    )?;
    if dim == 3 {
        let p: Vec<_> = VECTOR_PARITY.iter().map(|p| p.as_str()).collect();
        writeln!(w, "parity {}", p.join(" "))?;
    }
    writeln!(w, "end")?;
    Ok(())
}

fn write_values<T: Real>(w: &mut impl Write, values: &[T]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn write_snapshot<T: Real>(mut w: impl Write, spec: &GridSpec<T>, state: &ElsasserState<T>) -> Result<()> {
    write_header(&mut w, 3, state.t, spec)?;
    for z in [&state.zp, &state.zm] {
        for c in &z.c {
            if !c.matches(spec) {
                return Err(Error::ShapeMismatch("state does not match the grid".into()));
            }
            write_values(&mut w, &c.values)?;
        }
    }
    Ok(())
}

pub fn write_snapshot_2d<T: Real>(mut w: impl Write, spec: &GridSpec<T>, state: &State2D<T>) -> Result<()> {
    write_header(&mut w, 2, state.t, spec)?;
    for f in state.zp.iter().chain(&state.zm) {
        if f.nx != spec.nx || f.ny != spec.ny {
            return Err(Error::ShapeMismatch("state does not match the grid".into()));
        }
        write_values(&mut w, &f.values)?;
    }
    Ok(())
}

struct Header<T> {
    dim: usize,
    t: T,
    spec: GridSpec<T>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

fn parse_f64<T: Real>(s: &str) -> Result<T> {
    s.parse::<f64>().map(T::lit).map_err(|_| bad(format!("bad number {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| bad(format!("bad integer {s:?}")))
}

fn read_header<T: Real>(r: &mut impl BufRead) -> Result<Header<T>> {
    let mut line = String::new();
    let mut next = |r: &mut dyn BufRead| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("truncated header"));
        }
        Ok(line.trim_end().to_string())
    };
    if next(r)? != MAGIC {
        return Err(bad("missing magic line"));
    }
    let (mut dim, mut t, mut spec) = (None, None, None);
    loop {
        let l = next(r)?;
        let words: Vec<&str> = l.split_whitespace().collect();
        match words.as_slice() {
            ["end"] => break,
            ["dim", d] => dim = Some(parse_usize(d)?),
            ["t", v] => t = Some(parse_f64::<T>(v)?),
            ["grid", lx, ly, delta, nx, ny, nz, sigma, dealias] => {
                let mut s = GridSpec::new(
                    parse_f64(lx)?,
                    parse_f64(ly)?,
                    parse_f64(delta)?,
                    parse_usize(nx)?,
                    parse_usize(ny)?,
                    parse_usize(nz)?,
                )
                .with_sigma(parse_f64(sigma)?);
                s.dealias = dealias.parse().map_err(|_| bad("bad dealias flag"))?;
                s.validate().map_err(|e| bad(e.to_string()))?;
                spec = Some(s);
            }
            ["parity", ps @ ..] => {
                let expect: Vec<_> = VECTOR_PARITY.iter().map(|p| p.as_str()).collect();
                if ps != expect.as_slice() {
                    return Err(Error::Parity(format!("snapshot parities {ps:?} differ from {expect:?}")));
                }
            }
            _ => return Err(bad(format!("unrecognized header line {l:?}"))),
        }
    }
    let dim = dim.ok_or_else(|| bad("missing dim"))?;
    if dim != 2 && dim != 3 {
        return Err(bad(format!("dimension {dim}")));
    }
    Ok(Header {
        dim,
        t: t.ok_or_else(|| bad("missing time"))?,
        spec: spec.ok_or_else(|| bad("missing grid"))?,
    })
}

fn read_values<T: Real>(r: &mut impl Read, n: usize) -> Result<Vec<T>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf).map_err(|_| bad("truncated data"))?;
    Ok(buf
        .chunks_exact(8)
        .map(|b| T::lit(f64::from_le_bytes(b.try_into().expect("8-byte chunk"))))
        .collect())
}

fn expect_end(r: &mut impl Read) -> Result<()> {
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(bad("trailing bytes after data"));
    }
    Ok(())
}

pub fn read_snapshot<T: Real>(mut r: impl BufRead) -> Result<(GridSpec<T>, ElsasserState<T>)> {
    let h = read_header::<T>(&mut r)?;
    if h.dim != 3 {
        return Err(bad("expected a slab snapshot"));
    }
    let spec = h.spec;
    let mut field = |parity: Parity| -> Result<ScalarField<T>> {
        Ok(ScalarField {
            nx: spec.nx,
            ny: spec.ny,
            nz: spec.nz,
            values: read_values(&mut r, spec.len())?,
            parity,
        })
    };
    let mut vector = || -> Result<VectorField<T>> {
        Ok(VectorField {
            c: [field(VECTOR_PARITY[0])?, field(VECTOR_PARITY[1])?, field(VECTOR_PARITY[2])?],
        })
    };
    let zp = vector()?;
    let zm = vector()?;
    expect_end(&mut r)?;
    Ok((spec, ElsasserState { zp, zm, t: h.t }))
}

pub fn read_snapshot_2d<T: Real>(mut r: impl BufRead) -> Result<(GridSpec<T>, State2D<T>)> {
    let h = read_header::<T>(&mut r)?;
    if h.dim != 2 {
        return Err(bad("expected a planar snapshot"));
    }
    let spec = h.spec;
    let mut field = || -> Result<Field2<T>> {
        Ok(Field2 {
            nx: spec.nx,
            ny: spec.ny,
            values: read_values(&mut r, spec.nx * spec.ny)?,
        })
    };
    let zp = [field()?, field()?];
    let zm = [field()?, field()?];
    expect_end(&mut r)?;
    Ok((spec, State2D { zp, zm, t: h.t }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Spectral;
    use crate::testutil::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slab_file_restores_state() {
        let spec = GridSpec::new(2.0, 1.0, 0.3, 8, 4, 4).with_sigma(0.2);
        let sp = Spectral::new(&spec).unwrap();
        let mut s = random_state(&sp, 0.1, &mut ChaCha8Rng::seed_from_u64(5));
        s.t = 0.7;
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &spec, &s).unwrap();
        let (spec2, s2) = read_snapshot::<f64>(&buf[..]).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(s2, s);
    }

    #[test]
    fn planar_file_restores_state() {
        let spec = GridSpec::new(2.0, 1.0, 0.3, 8, 4, 4);
        let mut s = State2D::zeros(&spec);
        s.zp[1].values[3] = -0.25;
        s.zm[0].values[7] = 1e-300;
        let mut buf = Vec::new();
        write_snapshot_2d(&mut buf, &spec, &s).unwrap();
        let (_, s2) = read_snapshot_2d::<f64>(&buf[..]).unwrap();
        assert_eq!(s2, s);
        assert!(read_snapshot::<f64>(&buf[..]).is_err());
    }

    #[test]
    fn damaged_files_are_rejected() {
        let spec = GridSpec::new(2.0, 1.0, 0.3, 8, 4, 4);
        let s = State2D::zeros(&spec);
        let mut buf = Vec::new();
        write_snapshot_2d(&mut buf, &spec, &s).unwrap();
        assert!(matches!(read_snapshot_2d::<f64>(&buf[..buf.len() - 1]), Err(Error::Snapshot(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(read_snapshot_2d::<f64>(&long[..]).is_err());
        assert!(read_snapshot_2d::<f64>(&b"not a snapshot\n"[..]).is_err());
    }
}
