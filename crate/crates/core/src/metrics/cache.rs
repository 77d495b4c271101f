//! Flat binary cache of witness polylines.
//!
//! Layout (little-endian): magic `QHGC`, u32 format version, u32 hash length +
//! domain hash bytes, f64 resolution, u32 neighbors, f64 quad_tol, then records
//! of u32 dimension, u32 point count, coordinates as f64, f64 k_upper, f64 k_lower.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::graph::GraphParams;
use crate::error::{Error, Result};
use crate::space::{Domain, Point, Polyline};

const MAGIC: &[u8; 4] = b"QHGC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CachedWitness {
    pub vertices: Vec<Point>,
    pub k_upper: f64,
    pub k_lower: f64,
}

#[derive(Clone, Debug)]
pub struct GeodesicCache {
    domain_hash: String,
    resolution: f64,
    neighbors: u32,
    quad_tol: f64,
    records: Vec<CachedWitness>,
}

impl GeodesicCache {
    pub fn new(domain: &Domain, params: &GraphParams) -> Self {
        Self {
            domain_hash: domain.hash().to_string(),
            resolution: params.resolution,
            neighbors: params.neighbors as u32,
            quad_tol: params.quad_tol,
            records: Vec::new(),
        }
    }

    /// Cache file name for a domain and graph resolution inside `dir`.
    pub fn path_in(dir: &Path, domain: &Domain, params: &GraphParams) -> PathBuf {
        dir.join(format!("{}-{:016x}.qhgc", domain.hash(), params.resolution.to_bits()))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, w: CachedWitness) {
        self.records.retain(|r| {
            !(r.vertices.first() == w.vertices.first() && r.vertices.last() == w.vertices.last())
        });
        self.records.push(w);
    }

    /// Cached witness for the pair, revalidated against the domain: every
    /// segment visible and the recomputed qh length within 1e-6 of `k_upper`.
    pub fn lookup(&self, domain: &Domain, z1: &Point, z2: &Point) -> Option<(Polyline, CachedWitness)> {
        if domain.hash() != self.domain_hash {
            return None;
        }
        let rec = self
            .records
            .iter()
            .find(|r| r.vertices.first() == Some(z1) && r.vertices.last() == Some(z2))?;
        let line = Polyline::with_tol(domain, rec.vertices.clone(), self.quad_tol).ok()?;
        let ok = (line.qh_length() - rec.k_upper).abs() <= 1e-6 * rec.k_upper.max(1.0);
        ok.then(|| (line, rec.clone()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        b.extend_from_slice(&(self.domain_hash.len() as u32).to_le_bytes());
        b.extend_from_slice(self.domain_hash.as_bytes());
        b.extend_from_slice(&self.resolution.to_le_bytes());
        b.extend_from_slice(&self.neighbors.to_le_bytes());
        b.extend_from_slice(&self.quad_tol.to_le_bytes());
        for r in &self.records {
            let dim = r.vertices.first().map(Point::dim).unwrap_or(2);
            b.extend_from_slice(&(dim as u32).to_le_bytes());
            b.extend_from_slice(&(r.vertices.len() as u32).to_le_bytes());
            for v in &r.vertices {
                for c in v.coords() {
                    b.extend_from_slice(&c.to_le_bytes());
                }
            }
            b.extend_from_slice(&r.k_upper.to_le_bytes());
            b.extend_from_slice(&r.k_lower.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { b: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::CacheFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::CacheFormat(format!("unsupported version {version}")));
        }
        let hlen = r.u32()? as usize;
        let domain_hash = String::from_utf8(r.take(hlen)?.to_vec())
            .map_err(|_| Error::CacheFormat("hash is not utf-8".into()))?;
        let resolution = r.f64()?;
        let neighbors = r.u32()?;
        let quad_tol = r.f64()?;
        let mut records = Vec::new();
        while r.pos < bytes.len() {
            let dim = r.u32()? as usize;
            let count = r.u32()? as usize;
            let mut vertices = Vec::with_capacity(count);
            for _ in 0..count {
                let mut c = [0.0; 3];
                for slot in c.iter_mut().take(dim) {
                    *slot = r.f64()?;
                }
                vertices.push(Point::new(&c[..dim]).map_err(|e| Error::CacheFormat(e.to_string()))?);
            }
            let k_upper = r.f64()?;
            let k_lower = r.f64()?;
            records.push(CachedWitness { vertices, k_upper, k_lower });
        }
        Ok(Self { domain_hash, resolution, neighbors, quad_tol, records })
    }

    /// Loads a cache file; a missing file, another domain, or other graph
    /// parameters all yield an empty cache for `domain`.
    pub fn load_or_new(path: &Path, domain: &Domain, params: &GraphParams) -> Result<Self> {
        let fresh = Self::new(domain, params);
        let mut f = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(fresh),
            Err(e) => return Err(e.into()),
        };
        let mut bytes = Vec::new();
        f.read_to_end(&mut bytes)?;
        let cache = Self::from_bytes(&bytes)?;
        let same = cache.domain_hash == fresh.domain_hash
            && cache.resolution == fresh.resolution
            && cache.neighbors == fresh.neighbors
            && cache.quad_tol == fresh.quad_tol;
        Ok(if same { cache } else { fresh })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.b.len());
        let end = end.ok_or_else(|| Error::CacheFormat("truncated file".into()))?;
        let s = &self.b[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn witness(domain: &Domain) -> CachedWitness {
        let v = vec![Point::xy(-0.5, 0.2), Point::xy(0.0, 0.3), Point::xy(0.5, 0.2)];
        let line = Polyline::new(domain, v.clone()).unwrap();
        CachedWitness { vertices: v, k_upper: line.qh_length(), k_lower: 0.5 }
    }

    #[test]
    fn roundtrip_and_revalidation() {
        let ball = Domain::unit_disk();
        let params = GraphParams::new(0.1, 8, 1);
        let mut c = GeodesicCache::new(&ball, &params);
        c.insert(witness(&ball));
        let dir = tempfile::tempdir().unwrap();
        let path = GeodesicCache::path_in(dir.path(), &ball, &params);
        c.save(&path).unwrap();
        let back = GeodesicCache::load_or_new(&path, &ball, &params).unwrap();
        assert_eq!(back.len(), 1);
        let (line, rec) = back.lookup(&ball, &Point::xy(-0.5, 0.2), &Point::xy(0.5, 0.2)).unwrap();
        assert_eq!(rec, witness(&ball));
        assert_eq!(line.len(), 3);
    }

    #[test]
    fn stale_entries_ignored() {
        let ball = Domain::unit_disk();
        let params = GraphParams::new(0.1, 8, 1);
        let mut c = GeodesicCache::new(&ball, &params);
        let mut w = witness(&ball);
        w.k_upper += 0.1;
        c.insert(w);
        assert!(c.lookup(&ball, &Point::xy(-0.5, 0.2), &Point::xy(0.5, 0.2)).is_none());
        let other = Domain::ball(Point::xy(0.0, 0.0), 2.0).unwrap();
        let mut c = GeodesicCache::new(&ball, &params);
        c.insert(witness(&ball));
        assert!(c.lookup(&other, &Point::xy(-0.5, 0.2), &Point::xy(0.5, 0.2)).is_none());
        // A witness crossing the slit fails revalidation in the slit disk.
        let slit = Domain::slit_disk();
        let mut c = GeodesicCache::new(&slit, &params);
        let v = vec![Point::xy(0.5, 0.2), Point::xy(0.5, -0.2)];
        c.insert(CachedWitness { vertices: v, k_upper: 1.0, k_lower: 0.1 });
        assert!(c.lookup(&slit, &Point::xy(0.5, 0.2), &Point::xy(0.5, -0.2)).is_none());
    }

    #[test]
    fn truncated_file_rejected() {
        let ball = Domain::unit_disk();
        let mut c = GeodesicCache::new(&ball, &GraphParams::new(0.1, 8, 1));
        c.insert(witness(&ball));
        let bytes = c.to_bytes();
        assert!(matches!(GeodesicCache::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::CacheFormat(_))));
    }
}
