use super::Raster;

/// Offsets `(di, dj)` of a circular structuring element of diameter `k`
/// pixels: every offset with `di^2 + dj^2 <= (k/2)^2`.
pub fn disk_offsets(k: usize) -> Vec<(isize, isize)> {
    let reach = (k / 2) as isize;
    let k2 = (k * k) as isize;
    let mut out = Vec::new();
    for di in -reach..=reach {
        for dj in -reach..=reach {
            if 4 * (di * di + dj * dj) <= k2 {
                out.push((di, dj));
            }
        }
    }
    out
}

/// Morphological dilation by a circular element of diameter `k` pixels.
/// Pixels pushed past the frame are dropped.
pub fn dilate(r: &Raster, k: usize) -> Raster {
    assert!(k >= 1, "dilation kernel diameter must be at least 1");
    let offsets = disk_offsets(k);
    let (h, w) = (r.height() as isize, r.width() as isize);
    let mut out = Raster::empty(r.config());
    for (i, j) in r.pixels() {
        for &(di, dj) in &offsets {
            let (y, x) = (i as isize + di, j as isize + dj);
            if y >= 0 && y < h && x >= 0 && x < w {
                out.set(y as usize, x as usize, true);
            }
        }
    }
    out
}
