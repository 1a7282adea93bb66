use std::io::{Read, Write};

use num_complex::Complex;
use rayon::prelude::*;

use super::probe::ProbeSymbol;
use super::symbol::{incident_symbol, scattered_symbol, RayPair, VConvention};
use crate::error::{Error, Result};
use crate::phantom::DensityModel;
use crate::scalar::{c, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct RayResult<T> {
    pub ray: RayPair<T>,
    pub incident: Complex<T>,
    pub scattered: Complex<T>,
    pub ratio: Complex<T>,
}

fn header(n: usize) -> Vec<String> {
    let mut h = Vec::new();
    for name in ["y1", "y2", "k1", "k2"] {
        h.extend((0..n).map(|i| format!("{name}_{i}")));
    }
    h.extend(["sigma1", "sigma2", "t"].map(String::from));
    h
}

/// Rows `y1_*, y2_*, k1_*, k2_*, sigma1, sigma2, t`.
pub fn read_ray_batch<T: Real, R: Read>(r: R) -> Result<Vec<RayPair<T>>> {
    let mut reader = csv::Reader::from_reader(r);
    let cols = reader.headers().map_err(|e| Error::Format(e.to_string()))?.len();
    if cols < 7 || (cols - 3) % 4 != 0 {
        return Err(Error::Format(format!("ray batch has {cols} columns; expected 4n + 3")));
    }
    let n = (cols - 3) / 4;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let v: Vec<T> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map(c).map_err(|e| Error::Format(format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        let part = |k: usize| v[k * n..(k + 1) * n].to_vec();
        out.push(RayPair::new(part(0), part(1), part(2), part(3), v[4 * n], v[4 * n + 1], v[4 * n + 2]));
    }
    Ok(out)
}

/// Incident, scattered and ratio at each ray's own time, in parallel.
pub fn evaluate_rays<T: Real, M: DensityModel<T> + ?Sized>(
    rho: &M,
    g: T,
    probe: &ProbeSymbol<T>,
    rays: &[RayPair<T>],
    v: &VConvention<T>,
) -> Result<Vec<RayResult<T>>> {
    rays.par_iter()
        .map(|ray| {
            let incident = incident_symbol(probe, ray, ray.t, v)?;
            let scattered = scattered_symbol(rho, g, probe, ray, ray.t, v)?;
            let ratio = if incident.norm() > T::zero() { scattered / incident } else { Complex::new(T::nan(), T::nan()) };
            Ok(RayResult { ray: ray.clone(), incident, scattered, ratio })
        })
        .collect()
}

pub fn write_ray_results<T: Real, W: Write>(results: &[RayResult<T>], w: W) -> Result<()> {
    let n = results.first().map_or(0, |r| r.ray.y1.len());
    let mut out = csv::Writer::from_writer(w);
    let mut h = header(n);
    h.extend(["incident_re", "incident_im", "scattered_re", "scattered_im", "ratio_re", "ratio_im"].map(String::from));
    out.write_record(&h).map_err(|e| Error::Format(e.to_string()))?;
    for r in results {
        let ray = &r.ray;
        let row: Vec<String> = ray
            .y1
            .iter()
            .chain(&ray.y2)
            .chain(&ray.k1)
            .chain(&ray.k2)
            .chain([&ray.s1, &ray.s2, &ray.t])
            .copied()
            .chain([r.incident, r.scattered, r.ratio].iter().flat_map(|z| [z.re, z.im]))
            .map(|x| format!("{:e}", x.to_f64_lossy()))
            .collect();
        out.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::Phantom;

    #[test]
    fn batch_round_trip() {
        let text = "y1_0,y1_1,y2_0,y2_1,k1_0,k1_1,k2_0,k2_1,sigma1,sigma2,t\n0,0,0,0,1,0,0,1,2,3,1.5\n";
        let rays: Vec<RayPair<f64>> = read_ray_batch(text.as_bytes()).unwrap();
        assert_eq!(rays.len(), 1);
        assert_eq!(rays[0].k2, vec![0.0, 1.0]);
        let probe = ProbeSymbol::new(0.1, 2.0, vec![1.0, 0.0]).unwrap();
        let res = evaluate_rays(&Phantom::Zero, 1.0, &probe, &rays, &VConvention::default()).unwrap();
        assert_eq!(res[0].scattered, Complex::new(0.0, 0.0));
        let mut buf = Vec::new();
        write_ray_results(&res, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("y1_0,"));
        assert!(s.lines().next().unwrap().ends_with("ratio_im"));
        assert_eq!(s.lines().count(), 2);
    }

    #[test]
    fn malformed_batch_rejected() {
        assert!(read_ray_batch::<f64, _>("a,b\n1,2\n".as_bytes()).is_err());
    }
}
