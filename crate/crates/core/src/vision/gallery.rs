//! Identity gallery and nearest-cosine-distance matching.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::binio;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::vision::embedding::{cosine_similarity, FaceEmbedding, EMBED_DIM};

const GALLERY_MAGIC: &[u8; 6] = b"AFGAL1";

/// Identity-labeled embeddings of the target children.
///
/// A probe matches when its cosine *distance* (`1 - similarity`) to some
/// entry is below `threshold`; ties between equally distant entries resolve
/// to the earliest-inserted one.
#[derive(Debug, Clone)]
pub struct FaceGallery<T> {
    entries: Vec<(String, FaceEmbedding<T>)>,
    threshold: f64,
}

impl<T: Real> FaceGallery<T> {
    /// Empty gallery with a matching threshold in `(0, 2)`.
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 2.0) {
            return Err(Error::Gallery(format!(
                "threshold must be in (0, 2), got {threshold}"
            )));
        }
        Ok(FaceGallery {
            entries: Vec::new(),
            threshold,
        })
    }

    pub fn push(&mut self, identity: &str, embedding: FaceEmbedding<T>) -> Result<()> {
        if identity.is_empty() {
            return Err(Error::Gallery("identity must be non-empty".into()));
        }
        self.entries.push((identity.to_string(), embedding));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn entries(&self) -> &[(String, FaceEmbedding<T>)] {
        &self.entries
    }

    /// Write in `AFGAL1` format: magic, u32-LE entry count, u32-LE dim, then
    /// per entry a u16-LE name length, UTF-8 name, and 128 float32-LE values.
    /// The threshold is run configuration, not part of the file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        binio::write_magic(&mut w, GALLERY_MAGIC)?;
        binio::write_u32(&mut w, self.entries.len() as u32)?;
        binio::write_u32(&mut w, EMBED_DIM as u32)?;
        for (name, emb) in &self.entries {
            let bytes = name.as_bytes();
            if bytes.len() > u16::MAX as usize {
                return Err(Error::Gallery(format!("identity name too long: {name}")));
            }
            binio::write_u16(&mut w, bytes.len() as u16)?;
            use std::io::Write;
            w.write_all(bytes)?;
            for &v in emb.as_slice() {
                binio::write_f32(&mut w, v.to_f64_c() as f32)?;
            }
        }
        Ok(())
    }

    /// Read an `AFGAL1` file, attaching the caller-supplied threshold.
    pub fn load(path: &Path, threshold: f64) -> Result<Self> {
        let mut gallery = FaceGallery::new(threshold)?;
        let mut r = BufReader::new(File::open(path)?);
        binio::expect_magic(&mut r, GALLERY_MAGIC, path)?;
        let count = binio::read_u32(&mut r, path)? as usize;
        let dim = binio::read_u32(&mut r, path)? as usize;
        if dim != EMBED_DIM {
            return Err(Error::format(path, format!("embedding dim {dim}, expected {EMBED_DIM}")));
        }
        for _ in 0..count {
            let name_len = binio::read_u16(&mut r, path)? as usize;
            let mut name_bytes = vec![0u8; name_len];
            use std::io::Read;
            r.read_exact(&mut name_bytes)
                .map_err(|_| Error::format(path, "truncated identity name"))?;
            let name = String::from_utf8(name_bytes)
                .map_err(|_| Error::format(path, "identity name is not UTF-8"))?;
            let mut vector = Vec::with_capacity(EMBED_DIM);
            for _ in 0..EMBED_DIM {
                vector.push(T::from_f64_c(binio::read_f32(&mut r, path)? as f64));
            }
            gallery.push(&name, FaceEmbedding::new(vector)?)?;
        }
        binio::expect_eof(&mut r, path)?;
        Ok(gallery)
    }
}

/// Nearest-entry identity if its cosine distance is below the threshold.
pub fn match_gallery<'g, T: Real>(
    probe: &FaceEmbedding<T>,
    gallery: &'g FaceGallery<T>,
) -> Result<Option<&'g str>> {
    if gallery.is_empty() {
        return Err(Error::Gallery("cannot match against an empty gallery".into()));
    }
    let mut best: Option<(&str, f64)> = None;
    for (name, entry) in &gallery.entries {
        let d = 1.0 - cosine_similarity(probe, entry)?.to_f64_c();
        // Strict comparison keeps the earliest-inserted entry on ties.
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((name, d));
        }
    }
    let (name, d) = best.expect("gallery is non-empty");
    Ok((d < gallery.threshold).then_some(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(head: &[f64]) -> FaceEmbedding<f64> {
        let mut v = vec![0.0; EMBED_DIM];
        v[..head.len()].copy_from_slice(head);
        FaceEmbedding::new(v).unwrap()
    }

    fn small_gallery() -> FaceGallery<f64> {
        let mut g = FaceGallery::new(0.4).unwrap();
        g.push("ana", emb(&[1.0, 0.0, 0.0])).unwrap();
        g.push("ben", emb(&[0.0, 1.0, 0.0])).unwrap();
        g
    }

    #[test]
    fn exact_entry_matches_itself() {
        let g = small_gallery();
        let hit = match_gallery(&emb(&[1.0, 0.0, 0.0]), &g).unwrap();
        assert_eq!(hit, Some("ana"));
    }

    #[test]
    fn orthogonal_probe_matches_nothing() {
        let g = small_gallery();
        let miss = match_gallery(&emb(&[0.0, 0.0, 1.0]), &g).unwrap();
        assert_eq!(miss, None);
    }

    #[test]
    fn nearest_of_two_candidates_wins() {
        let mut g = FaceGallery::new(0.4).unwrap();
        // Probe (1,0): distances 1 - cos.
        g.push("far", emb(&[0.75, 1.0])).unwrap(); // d = 0.25-ish
        g.push("near", emb(&[1.0, 0.45])).unwrap(); // d = 0.10-ish
        let probe = emb(&[1.0, 0.0]);
        // Brute-force the expectation.
        let mut dists: Vec<(f64, &str)> = g
            .entries()
            .iter()
            .map(|(n, e)| (1.0 - cosine_similarity(&probe, e).unwrap(), n.as_str()))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(match_gallery(&probe, &g).unwrap(), Some(dists[0].1));
        assert_eq!(dists[0].1, "near");
    }

    #[test]
    fn distance_at_threshold_is_a_miss() {
        // Orthogonal probe has distance exactly 1.0.
        let mut g = FaceGallery::new(1.0).unwrap();
        g.push("x", emb(&[1.0, 0.0])).unwrap();
        assert_eq!(match_gallery(&emb(&[0.0, 1.0]), &g).unwrap(), None);
    }

    #[test]
    fn tie_breaks_to_first_inserted() {
        let mut g = FaceGallery::new(0.9).unwrap();
        g.push("first", emb(&[1.0, 0.0])).unwrap();
        g.push("second", emb(&[1.0, 0.0])).unwrap();
        assert_eq!(match_gallery(&emb(&[1.0, 0.0]), &g).unwrap(), Some("first"));
    }

    #[test]
    fn empty_gallery_is_an_error() {
        let g: FaceGallery<f64> = FaceGallery::new(0.4).unwrap();
        assert!(match_gallery(&emb(&[1.0]), &g).is_err());
    }

    #[test]
    fn bad_threshold_rejected() {
        assert!(FaceGallery::<f64>::new(0.0).is_err());
        assert!(FaceGallery::<f64>::new(2.0).is_err());
    }

    #[test]
    fn match_invariant_to_entry_order_without_ties() {
        let entries = [
            ("ana", emb(&[1.0, 0.0, 0.0])),
            ("ben", emb(&[0.8, 0.6, 0.0])),
            ("caz", emb(&[0.0, 1.0, 0.0])),
        ];
        let probe = emb(&[0.9, 0.1, 0.0]);
        let mut forward = FaceGallery::new(0.9).unwrap();
        for (n, e) in &entries {
            forward.push(n, e.clone()).unwrap();
        }
        let mut backward = FaceGallery::new(0.9).unwrap();
        for (n, e) in entries.iter().rev() {
            backward.push(n, e.clone()).unwrap();
        }
        assert_eq!(
            match_gallery(&probe, &forward).unwrap(),
            match_gallery(&probe, &backward).unwrap()
        );
    }

    #[test]
    fn afgal1_roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.afgal");
        let mut g = FaceGallery::new(0.4).unwrap();
        g.push("child_p1", emb(&[0.25, -0.5, 0.125])).unwrap();
        g.push("child_p2", emb(&[0.0, 0.75])).unwrap();
        g.save(&path).unwrap();
        let loaded: FaceGallery<f64> = FaceGallery::load(&path, 0.4).unwrap();
        let path2 = dir.path().join("g2.afgal");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.entries()[0].0, "child_p1");
    }
}
