use std::collections::HashMap;

use crate::geometry::Point;

/// Merges vertices closer than `tolerance` (per-axis hash cells, exact
/// Euclidean check). Returns the unique vertices in first-seen order and a
/// map from old to new indices.
pub fn weld_vertices(vertices: &[Point], tolerance: f64) -> (Vec<Point>, Vec<u32>) {
    let tol = if tolerance > 0.0 { tolerance } else { f64::MIN_POSITIVE };
    let cell = |p: &Point| -> [i64; 3] { [0, 1, 2].map(|k| (p[k] / tol).floor() as i64) };

    let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut unique: Vec<Point> = Vec::new();
    let mut remap = Vec::with_capacity(vertices.len());

    for v in vertices {
        let c = cell(v);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if let Some(&id) = ids.iter().find(|&&id| (unique[id as usize] - v).norm() <= tolerance) {
                            found = Some(id);
                            break 'search;
                        }
                    }
                }
            }
        }
        let id = match found {
            Some(id) => id,
            None => {
                let id = unique.len() as u32;
                unique.push(*v);
                buckets.entry(c).or_default().push(id);
                id
            }
        };
        remap.push(id);
    }
    (unique, remap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_within_tolerance_only() {
        let pts = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(5e-10, 0.0, 0.0),
            Point::new(1e-6, 0.0, 0.0),
        ];
        let (u, map) = weld_vertices(&pts, 1e-9);
        assert_eq!(u.len(), 2);
        assert_eq!(map, vec![0, 0, 1]);
    }
}
