use super::Mask;

/// Offsets of the discrete disk `dx² + dy² <= r²`.
pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Binary dilation with a disk structuring element. Radius 0 is the identity.
pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let r = radius as isize;
    // Disk as per-row half-widths.
    let spans: Vec<(isize, isize)> = (-r..=r)
        .map(|dy| {
            let half = ((r * r - dy * dy) as f64).sqrt().floor() as isize;
            (dy, half)
        })
        .collect();
    let mut out = mask.map(|_| false);
    let src = mask.data();
    let dst = out.data_mut();
    for y in 0..h as isize {
        for x in 0..w as isize {
            if !src[(y as usize) * w + x as usize] {
                continue;
            }
            for &(dy, half) in &spans {
                let yy = y + dy;
                if yy < 0 || yy >= h as isize {
                    continue;
                }
                let x0 = (x - half).max(0) as usize;
                let x1 = (x + half).min(w as isize - 1) as usize;
                let row = yy as usize * w;
                dst[row + x0..=row + x1].iter_mut().for_each(|v| *v = true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn radius_zero_is_identity() {
        let m = Mask::from_fn(7, 5, |x, y| (x + y) % 3 == 0).unwrap();
        assert_eq!(dilate(&m, 0), m);
    }

    #[test]
    fn single_pixel_disk_radius_two() {
        let m = Mask::from_fn(9, 9, |x, y| x == 4 && y == 4).unwrap();
        let d = dilate(&m, 2);
        let expected = disk_offsets(2).len();
        assert_eq!(expected, 13);
        assert_eq!(d.count(), 13);
        for y in 0..9isize {
            for x in 0..9isize {
                let inside = (x - 4).pow(2) + (y - 4).pow(2) <= 4;
                assert_eq!(*d.get(x as usize, y as usize), inside);
            }
        }
    }

    #[test]
    fn universe_stays_universe() {
        let m = Mask::filled(6, 6, true).unwrap();
        assert_eq!(dilate(&m, 3), m);
    }

    /// Direct definition: output pixel set iff some input pixel lies within the disk.
    fn naive(mask: &Mask, r: usize) -> Mask {
        let offs = disk_offsets(r);
        let (w, h) = mask.dims();
        Mask::from_fn(w, h, |x, y| {
            offs.iter().any(|&(dx, dy)| {
                let (xx, yy) = (x as isize - dx, y as isize - dy);
                xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h && *mask.get(xx as usize, yy as usize)
            })
        })
        .unwrap()
    }

    proptest! {
        #[test]
        fn matches_definition_and_is_extensive(
            bits in proptest::collection::vec(proptest::bool::weighted(0.1), 12 * 10),
            r in 0usize..5,
        ) {
            let m = Mask::from_vec(12, 10, bits).unwrap();
            let d = dilate(&m, r);
            prop_assert_eq!(&d, &naive(&m, r));
            prop_assert!(m.is_subset_of(&d));
        }

        #[test]
        fn monotone(
            bits in proptest::collection::vec(proptest::bool::weighted(0.1), 10 * 10),
            extra in proptest::collection::vec(proptest::bool::weighted(0.1), 10 * 10),
            r in 0usize..4,
        ) {
            let a = Mask::from_vec(10, 10, bits).unwrap();
            let b = a.union(&Mask::from_vec(10, 10, extra).unwrap()).unwrap();
            prop_assert!(dilate(&a, r).is_subset_of(&dilate(&b, r)));
        }
    }
}
