//! Field-series files and atomic output.
//!
//! Binary layout, little-endian throughout:
//!
//! ```text
//! "STXF" | u8 version = 1 | u32 site_count | u32 n_times | u8 coord_system
//! f64 × 2 × site_count   coordinates (x, y) per site
//! f32 × site_count × n_times   values, time-major
//! ```
//!
//! The CSV form is a long table `time,site,value` with a sidecar `site,x,y`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CoordSystem, FieldSeries, SpatialGrid};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"STXF";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Binary,
    Csv,
}

impl DataFormat {
    /// `.csv` means CSV; anything else is binary.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Binary,
        }
    }
}

/// Default sidecar location: `sites.csv` next to the data file.
pub fn default_sites_path(data: &Path) -> PathBuf {
    data.with_file_name("sites.csv")
}

pub fn load_field_series(path: &Path, format: DataFormat) -> Result<FieldSeries<f32>> {
    match format {
        DataFormat::Binary => read_binary(path),
        DataFormat::Csv => read_csv(path, &default_sites_path(path), CoordSystem::LonLat),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated(format!("{} ends inside the {what}", path.display())),
        _ => Error::io(path, e),
    })
}

pub fn read_binary(path: &Path) -> Result<FieldSeries<f32>> {
    let mut r = BufReader::with_capacity(1 << 20, open(path)?);
    let mut header = [0u8; HEADER_LEN];
    read_exact_or_truncated(&mut r, &mut header[..4], path, "header")?;
    if &header[..4] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    read_exact_or_truncated(&mut r, &mut header[4..], path, "header")?;
    if header[4] != VERSION {
        return Err(Error::UnsupportedVersion(header[4]));
    }
    let n_sites = u32::from_le_bytes(header[5..9].try_into().expect("4 bytes")) as usize;
    let n_times = u32::from_le_bytes(header[9..13].try_into().expect("4 bytes")) as usize;
    let cs = CoordSystem::from_code(header[13])
        .ok_or_else(|| Error::Malformed(format!("unknown coordinate system code {}", header[13])))?;
    if n_sites == 0 || n_times == 0 {
        return Err(Error::Malformed("empty series".into()));
    }

    let mut coord_bytes = vec![0u8; 16 * n_sites];
    read_exact_or_truncated(&mut r, &mut coord_bytes, path, "coordinates")?;
    let coords = coord_bytes
        .chunks_exact(16)
        .map(|c| {
            (
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    let grid = Arc::new(SpatialGrid::new(coords, cs)?);

    let total = n_sites
        .checked_mul(n_times)
        .ok_or_else(|| Error::Malformed("dimensions overflow".into()))?;
    let mut values = Vec::with_capacity(total);
    let mut buf = vec![0u8; 4 * n_sites.max(1 << 16)];
    let mut remaining = total;
    while remaining > 0 {
        let take = remaining.min(buf.len() / 4);
        read_exact_or_truncated(&mut r, &mut buf[..4 * take], path, "values")?;
        values.extend(
            buf[..4 * take]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))),
        );
        remaining -= take;
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Malformed(format!("trailing bytes after values in {}", path.display())));
    }
    FieldSeries::new(grid, n_times, values)
}

/// Serialise to the binary layout; values are stored as `f32`.
pub fn encode_binary<T: Scalar>(series: &FieldSeries<T>) -> Result<Vec<u8>> {
    let n_sites = u32::try_from(series.site_count()).map_err(|_| Error::invalid("too many sites"))?;
    let n_times = u32::try_from(series.n_times()).map_err(|_| Error::invalid("too many time points"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * series.site_count() + 4 * series.values().len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&n_sites.to_le_bytes());
    out.extend_from_slice(&n_times.to_le_bytes());
    out.push(series.grid().coord_system().code());
    for &(x, y) in series.grid().coords() {
        out.extend_from_slice(&x.to_le_bytes());
        out.extend_from_slice(&y.to_le_bytes());
    }
    for v in series.values() {
        let f = v.to_f32().filter(|f| f.is_finite()).ok_or_else(|| {
            Error::NonFinite(format!("value {v} does not fit in f32"))
        })?;
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn write_binary<T: Scalar>(path: &Path, series: &FieldSeries<T>) -> Result<()> {
    write_atomic(path, &encode_binary(series)?)
}

fn parse_field<F: std::str::FromStr>(s: &str, what: &str, line: usize, path: &Path) -> Result<F> {
    s.trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("{}:{line}: bad {what} '{s}'", path.display())))
}

fn csv_lines(path: &Path, header: &str) -> Result<impl Iterator<Item = (usize, Result<String>)>> {
    let file = open(path)?;
    let p = path.to_path_buf();
    let mut lines = BufReader::new(file).lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == header => {}
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        _ => return Err(Error::Malformed(format!("{} must start with header '{header}'", path.display()))),
    }
    Ok(lines
        .map(move |(i, l)| (i + 1, l.map_err(|e| Error::io(&p, e))))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty())))
}

pub fn read_sites_csv(path: &Path, coord_system: CoordSystem) -> Result<SpatialGrid> {
    let mut rows: Vec<Option<(f64, f64)>> = Vec::new();
    for (line, text) in csv_lines(path, "site,x,y")? {
        let text = text?;
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Malformed(format!("{}:{line}: expected 3 fields", path.display())));
        }
        let site: usize = parse_field(parts[0], "site", line, path)?;
        let x: f64 = parse_field(parts[1], "x", line, path)?;
        let y: f64 = parse_field(parts[2], "y", line, path)?;
        if site >= rows.len() {
            rows.resize(site + 1, None);
        }
        if rows[site].replace((x, y)).is_some() {
            return Err(Error::Malformed(format!("{}:{line}: duplicate site {site}", path.display())));
        }
    }
    let coords = rows
        .into_iter()
        .enumerate()
        .map(|(s, c)| c.ok_or_else(|| Error::NonDense(format!("site {s} missing from {}", path.display()))))
        .collect::<Result<Vec<_>>>()?;
    SpatialGrid::new(coords, coord_system)
}

pub fn read_csv(path: &Path, sites_path: &Path, coord_system: CoordSystem) -> Result<FieldSeries<f32>> {
    let grid = Arc::new(read_sites_csv(sites_path, coord_system)?);
    let n_sites = grid.site_count();
    let mut cells: Vec<Option<f32>> = Vec::new();
    let mut n_times = 0;
    for (line, text) in csv_lines(path, "time,site,value")? {
        let text = text?;
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Malformed(format!("{}:{line}: expected 3 fields", path.display())));
        }
        let t: usize = parse_field(parts[0], "time", line, path)?;
        let s: usize = parse_field(parts[1], "site", line, path)?;
        let v: f32 = parse_field(parts[2], "value", line, path)?;
        if s >= n_sites {
            return Err(Error::Malformed(format!("{}:{line}: site {s} not in sidecar", path.display())));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{}:{line}: value at time {t}, site {s}", path.display())));
        }
        n_times = n_times.max(t + 1);
        if cells.len() < n_times * n_sites {
            cells.resize(n_times * n_sites, None);
        }
        if cells[t * n_sites + s].replace(v).is_some() {
            return Err(Error::Malformed(format!("{}:{line}: duplicate (time {t}, site {s})", path.display())));
        }
    }
    if n_times == 0 {
        return Err(Error::Malformed(format!("{} has no rows", path.display())));
    }
    let values = cells
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| Error::NonDense(format!("missing time {}, site {}", i / n_sites, i % n_sites)))
        })
        .collect::<Result<Vec<_>>>()?;
    FieldSeries::new(grid, n_times, values)
}

/// Write the long table to `path` and the sidecar to `sites_path`.
pub fn write_csv<T: Scalar>(path: &Path, sites_path: &Path, series: &FieldSeries<T>) -> Result<()> {
    let mut sites = String::from("site,x,y\n");
    for (s, (x, y)) in series.grid().coords().iter().enumerate() {
        sites.push_str(&format!("{s},{x},{y}\n"));
    }
    write_atomic(sites_path, sites.as_bytes())?;
    write_atomic_with(path, |w| {
        writeln!(w, "time,site,value")?;
        for (t, field) in series.fields().enumerate() {
            for (s, v) in field.iter().enumerate() {
                writeln!(w, "{t},{s},{v}")?;
            }
        }
        Ok(())
    })
}

/// Write to a temporary file in the target directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |w| w.write_all(bytes))
}

pub fn write_atomic_with(path: &Path, body: impl FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_series(seed: u64) -> FieldSeries<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..5).map(|i| (i as f64 * 0.3 + 40.0, 16.5 - i as f64 * 0.1)).collect();
        let grid = Arc::new(SpatialGrid::new(coords, CoordSystem::LonLat).unwrap());
        let values = (0..35).map(|_| rng.random::<f32>() * 10.0 - 5.0).collect();
        FieldSeries::new(grid, 7, values).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.stxf");
        let s = random_series(1);
        write_binary(&path, &s).unwrap();
        let back = read_binary(&path).unwrap();
        assert_eq!(back.grid(), s.grid());
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.values()), bits(s.values()));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let s = random_series(2);
        write_csv(&path, &default_sites_path(&path), &s).unwrap();
        let back = load_field_series(&path, DataFormat::Csv).unwrap();
        assert_eq!(back.grid(), s.grid());
        assert_eq!(back.values(), s.values());
    }

    #[test]
    fn binary_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.stxf");
        let bytes = encode_binary(&random_series(3)).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        let err = read_binary(&path).unwrap_err();
        assert!(err.to_string().starts_with("truncated payload"), "{err}");
        assert_eq!(err.exit_code(), 11);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_binary(&path), Err(Error::BadMagic(_))));

        let mut nan = bytes.clone();
        let n = nan.len();
        nan[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, &nan).unwrap();
        assert!(matches!(read_binary(&path), Err(Error::NonFinite(_))));

        let mut v2 = bytes.clone();
        v2[4] = 2;
        std::fs::write(&path, &v2).unwrap();
        assert!(matches!(read_binary(&path), Err(Error::UnsupportedVersion(2))));

        let mut long = bytes;
        long.push(0);
        std::fs::write(&path, &long).unwrap();
        assert!(matches!(read_binary(&path), Err(Error::Malformed(_))));
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(default_sites_path(&path), "site,x,y\n0,0,0\n1,1,0\n").unwrap();

        std::fs::write(&path, "time,site,value\n0,0,1\n0,1,2\n1,0,3\n").unwrap();
        let err = load_field_series(&path, DataFormat::Csv).unwrap_err();
        assert!(err.to_string().starts_with("non-dense series"), "{err}");
        assert_eq!(err.exit_code(), 12);

        std::fs::write(&path, "time,site,value\n0,0,1\n0,1,NaN\n").unwrap();
        assert!(matches!(load_field_series(&path, DataFormat::Csv), Err(Error::NonFinite(_))));

        std::fs::write(&path, "t,s,v\n0,0,1\n").unwrap();
        assert!(matches!(load_field_series(&path, DataFormat::Csv), Err(Error::Malformed(_))));

        std::fs::write(&path, "time,site,value\n0,0,1\n0,1,2\n").unwrap();
        assert_eq!(load_field_series(&path, DataFormat::Csv).unwrap().n_times(), 1);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert_eq!(DataFormat::infer(Path::new("a/b.CSV")), DataFormat::Csv);
        assert_eq!(DataFormat::infer(Path::new("a/b.stxf")), DataFormat::Binary);
    }
}
