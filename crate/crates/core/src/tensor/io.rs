//! `NDT1` tensor files: magic `NDT1`, one rank byte (≤ 8), `rank`
//! little-endian `u32` extents, then the samples as little-endian `f32`.
//! No padding anywhere.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"NDT1";
pub const MAX_RANK: usize = 8;

fn format(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn write_ndt<W: Write>(t: &Tensor<f32>, mut w: W) -> Result<()> {
    if t.rank() > MAX_RANK {
        return Err(format(format!("rank {} exceeds {MAX_RANK}", t.rank())));
    }
    w.write_all(&MAGIC)?;
    w.write_all(&[t.rank() as u8])?;
    for &e in t.shape() {
        let e = u32::try_from(e).map_err(|_| format(format!("extent {e} does not fit in u32")))?;
        w.write_all(&e.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.len() * 4);
    for &x in t.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_exact_or_format<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

pub fn read_ndt<R: Read>(mut r: R) -> Result<Tensor<f32>> {
    let mut magic = [0u8; 4];
    read_exact_or_format(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(format(format!("bad magic {magic:?}")));
    }
    let mut rank = [0u8; 1];
    read_exact_or_format(&mut r, &mut rank, "rank")?;
    let rank = rank[0] as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(format(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let mut shape = Vec::with_capacity(rank);
    let mut count: usize = 1;
    for _ in 0..rank {
        let mut e = [0u8; 4];
        read_exact_or_format(&mut r, &mut e, "extents")?;
        let e = u32::from_le_bytes(e) as usize;
        if e == 0 {
            return Err(format("zero extent"));
        }
        count = count
            .checked_mul(e)
            .and_then(|c| c.checked_mul(4).map(|_| c))
            .ok_or_else(|| format("extent product overflows"))?;
        shape.push(e);
    }
    // Grows with the bytes actually present, so a lying header cannot force
    // a huge allocation up front.
    let mut payload = Vec::new();
    r.by_ref()
        .take((count * 4) as u64)
        .read_to_end(&mut payload)?;
    if payload.len() != count * 4 {
        return Err(format(format!(
            "truncated payload: expected {} bytes, found {}",
            count * 4,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor::new(shape, data)
}

pub fn save(t: &Tensor<f32>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_ndt(t, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a whole file; trailing bytes after the payload are a format error.
pub fn load(path: impl AsRef<Path>) -> Result<Tensor<f32>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::MissingArtifact(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    let mut r = BufReader::new(f);
    let t = read_ndt(&mut r)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(format(format!(
            "{}: trailing bytes after payload",
            path.display()
        )));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn roundtrip(t: &Tensor<f32>) -> Tensor<f32> {
        let mut buf = Vec::new();
        write_ndt(t, &mut buf).unwrap();
        read_ndt(buf.as_slice()).unwrap()
    }

    #[test]
    fn zeros_roundtrip() {
        let t = Tensor::<f32>::zeros(&[2, 2]).unwrap();
        assert_eq!(roundtrip(&t), t);
    }

    #[test]
    fn header_layout_is_exact() {
        let t = Tensor::new(vec![1, 2], vec![1.0f32, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_ndt(&t, &mut buf).unwrap();
        let mut expected = b"NDT1".to_vec();
        expected.push(2);
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.0f32).to_le_bytes());
        assert_eq!(buf, expected);
    }

    #[test]
    fn large_random_roundtrip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f32> = (0..3 * 348 * 348)
            .map(|_| rng.gen::<f32>() * 2.0 - 1.0)
            .collect();
        let t = Tensor::new(vec![3, 348, 348], data).unwrap();
        let back = roundtrip(&t);
        assert_eq!(back.shape(), t.shape());
        assert!(back
            .data()
            .iter()
            .zip(t.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn bad_magic() {
        let err = read_ndt(&b"NDT2\x01\x01\x00\x00\x00\x00\x00\x00\x00"[..]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn truncated_payload_and_header() {
        let t = Tensor::new(vec![4], vec![1.0f32; 4]).unwrap();
        let mut buf = Vec::new();
        write_ndt(&t, &mut buf).unwrap();
        for cut in [3, 5, 7, buf.len() - 1] {
            assert!(
                matches!(read_ndt(&buf[..cut]), Err(Error::Format(_))),
                "cut {cut}"
            );
        }
    }

    #[test]
    fn rank_above_eight_is_rejected() {
        let mut buf = b"NDT1".to_vec();
        buf.push(9);
        buf.extend(std::iter::repeat_n(1u32.to_le_bytes(), 9).flatten());
        buf.extend_from_slice(&0f32.to_le_bytes());
        assert!(matches!(read_ndt(buf.as_slice()), Err(Error::Format(_))));
        let t = Tensor::<f32>::zeros(&[1; 9]).unwrap();
        assert!(matches!(write_ndt(&t, Vec::new()), Err(Error::Format(_))));
    }

    #[test]
    fn file_roundtrip_and_trailing_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.ndt");
        let t = Tensor::new(
            vec![2, 3],
            vec![0.5f32, 1.5, -2.5, 3.0, f32::MIN_POSITIVE, 7.0],
        )
        .unwrap();
        save(&t, &p).unwrap();
        assert_eq!(load(&p).unwrap(), t);
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.push(0);
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(load(&p), Err(Error::Format(_))));
        assert!(matches!(
            load(dir.path().join("missing.ndt")),
            Err(Error::MissingArtifact(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn roundtrip_is_bit_exact(
                shape in proptest::collection::vec(1usize..5, 1..5),
                seed in any::<u64>(),
            ) {
                let n: usize = shape.iter().product();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let data: Vec<f32> = (0..n).map(|_| f32::from_bits(rand::Rng::gen::<u32>(&mut rng) & 0x7f7f_ffff)).collect();
                let t = Tensor::new(shape, data).unwrap();
                let back = roundtrip(&t);
                prop_assert_eq!(back.shape(), t.shape());
                prop_assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
    }
}
