use crate::error::{Error, Result};
use crate::volume::{MaskField, ScalarField};

fn line_stride(dims: [usize; 3], axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    }
}

/// One-dimensional dilation (`grow = true`) or erosion along `axis` with a
/// segment of half-length `r`. Out-of-grid samples are ignored.
fn axis_pass(bits: &[bool], dims: [usize; 3], axis: usize, r: usize, grow: bool) -> Vec<bool> {
    let stride = line_stride(dims, axis);
    let n = dims[axis];
    let len = bits.len();
    let mut out = vec![false; len];
    for (idx, slot) in out.iter_mut().enumerate() {
        let pos = (idx / stride) % n;
        let lo = pos.saturating_sub(r);
        let hi = (pos + r).min(n - 1);
        let base = idx - pos * stride;
        let mut hit = !grow;
        for p in lo..=hi {
            let b = bits[base + p * stride];
            if grow && b {
                hit = true;
                break;
            }
            if !grow && !b {
                hit = false;
                break;
            }
        }
        *slot = hit;
    }
    out
}

/// Dilation by the 3-D cross of radius `r` (the union of the three axis
/// segments).
pub fn dilate_cross(mask: &MaskField, r: usize) -> MaskField {
    let dims = mask.geometry.dims;
    let mut bits = vec![false; mask.bits.len()];
    for axis in 0..3 {
        let pass = axis_pass(&mask.bits, dims, axis, r, true);
        bits.iter_mut().zip(pass).for_each(|(b, p)| *b |= p);
    }
    MaskField {
        geometry: mask.geometry,
        bits,
    }
}

/// Erosion by the 3-D cross of radius `r`.
pub fn erode_cross(mask: &MaskField, r: usize) -> MaskField {
    let dims = mask.geometry.dims;
    let mut bits = mask.bits.clone();
    for axis in 0..3 {
        let pass = axis_pass(&mask.bits, dims, axis, r, false);
        bits.iter_mut().zip(pass).for_each(|(b, p)| *b &= p);
    }
    MaskField {
        geometry: mask.geometry,
        bits,
    }
}

/// Band of voxels straddling the zero level set of `psi`:
/// `(I ⊕ S) − (I ⊖ S)` with `I = {ψ < 0}` and `S` the cross of radius
/// `(stencil_size − 1) / 2`.
pub fn select_narrowband(psi: &ScalarField, stencil_size: usize) -> Result<MaskField> {
    if stencil_size < 3 || stencil_size % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "stencil size must be odd and at least 3, got {stencil_size}"
        )));
    }
    let r = (stencil_size - 1) / 2;
    let inside = MaskField {
        geometry: psi.geometry,
        bits: psi.values.iter().map(|&v| v < 0.0).collect(),
    };
    let grown = dilate_cross(&inside, r);
    let shrunk = erode_cross(&inside, r);
    Ok(MaskField {
        geometry: psi.geometry,
        bits: grown
            .bits
            .iter()
            .zip(&shrunk.bits)
            .map(|(&g, &s)| g && !s)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridGeometry;
    use proptest::prelude::*;

    /// Brute-force set morphology with the explicit cross offsets.
    fn brute_band(inside: &[bool], dims: [usize; 3], r: isize) -> Vec<bool> {
        let g = GridGeometry::new(dims, [1.0; 3], [0.0; 3]).unwrap();
        let mut offsets = vec![[0isize; 3]];
        for a in 0..3 {
            for t in 1..=r {
                let mut o = [0; 3];
                o[a] = t;
                offsets.push(o);
                o[a] = -t;
                offsets.push(o);
            }
        }
        let at = |p: [isize; 3]| -> Option<bool> {
            if (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < dims[a]) {
                Some(inside[g.index(p[0] as usize, p[1] as usize, p[2] as usize)])
            } else {
                None
            }
        };
        (0..g.len())
            .map(|idx| {
                let c = g.coords(idx).map(|v| v as isize);
                let shifted = |o: &[isize; 3]| at([c[0] + o[0], c[1] + o[1], c[2] + o[2]]);
                let dil = offsets.iter().any(|o| shifted(o) == Some(true));
                let ero = offsets.iter().all(|o| shifted(o) != Some(false));
                dil && !ero
            })
            .collect()
    }

    #[test]
    fn all_positive_is_empty() {
        let g = GridGeometry::new([6, 6, 6], [1.0; 3], [0.0; 3]).unwrap();
        let band = select_narrowband(&ScalarField::filled(g, 1.0), 5).unwrap();
        assert_eq!(band.count(), 0);
    }

    #[test]
    fn single_voxel_gives_cross() {
        let g = GridGeometry::new([9, 9, 9], [1.0; 3], [0.0; 3]).unwrap();
        let mut psi = ScalarField::filled(g, 1.0);
        psi.values[g.index(4, 4, 4)] = -1.0;
        let band = select_narrowband(&psi, 5).unwrap();
        assert_eq!(band.count(), 13);
        assert!(band.bits[g.index(4, 4, 2)] && band.bits[g.index(6, 4, 4)]);
        assert!(!band.bits[g.index(5, 5, 4)]);
    }

    #[test]
    fn half_space_band_has_2r_layers() {
        let g = GridGeometry::new([12, 5, 5], [1.0; 3], [-5.5, 0.0, 0.0]).unwrap();
        let psi = ScalarField::from_fn(g, |x| x[0]);
        let band = select_narrowband(&psi, 5).unwrap();
        let layers: Vec<usize> = (0..12).filter(|&i| band.bits[g.index(i, 2, 2)]).collect();
        // x = -1.5, -0.5 inside; 0.5, 1.5 outside.
        assert_eq!(layers, vec![4, 5, 6, 7]);
        assert_eq!(band.count(), 4 * 25);
    }

    #[test]
    fn rejects_even_stencil() {
        let g = GridGeometry::new([4, 4, 4], [1.0; 3], [0.0; 3]).unwrap();
        assert!(select_narrowband(&ScalarField::filled(g, 1.0), 4).is_err());
        assert!(select_narrowband(&ScalarField::filled(g, 1.0), 1).is_err());
    }

    proptest! {
        #[test]
        fn matches_brute_force(bits in proptest::collection::vec(any::<bool>(), 6 * 5 * 7), stencil in prop_oneof![Just(3usize), Just(5), Just(7)]) {
            let dims = [6, 5, 7];
            let g = GridGeometry::new(dims, [1.0; 3], [0.0; 3]).unwrap();
            let psi = ScalarField::new(g, bits.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect()).unwrap();
            let band = select_narrowband(&psi, stencil).unwrap();
            prop_assert_eq!(band.bits, brute_band(&bits, dims, (stencil as isize - 1) / 2));
        }
    }
}
