//! Thin FFI layer over the system LAPACK (provided by OpenBLAS): dense
//! nonsymmetric eigendecomposition and singular values. All wrappers pin
//! OpenBLAS to one thread; parallelism lives above this layer where it is
//! deterministic.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use std::os::raw::c_char;
use std::sync::Once;

#[allow(clippy::too_many_arguments)]
extern "C" {
    fn openblas_set_num_threads(n: i32);

    fn zgeev_(
        jobvl: *const c_char,
        jobvr: *const c_char,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut C64,
        vl: *mut C64,
        ldvl: *const i32,
        vr: *mut C64,
        ldvr: *const i32,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );

}

static INIT: Once = Once::new();

fn single_threaded() {
    INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

fn as_i32(n: usize) -> i32 {
    i32::try_from(n).expect("dimension fits in i32")
}

/// Eigenvalues and right eigenvectors of a general square complex matrix.
pub fn eig(a: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    assert!(a.is_square());
    single_threaded();
    let n = a.rows();
    let ni = as_i32(n);
    let mut work_a = a.clone();
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut vr = CMatrix::zeros(n, n);
    let mut rwork = vec![0.0_f64; 2 * n];
    let mut info: i32 = 0;
    let jobvl = b'N' as c_char;
    let jobvr = b'V' as c_char;
    let one: i32 = 1;

    // Workspace query, then the real call.
    let mut lwork: i32 = -1;
    let mut query = [C64::new(0.0, 0.0)];
    unsafe {
        zgeev_(
            &jobvl,
            &jobvr,
            &ni,
            work_a.data_mut().as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            vr.data_mut().as_mut_ptr(),
            &ni,
            query.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgeev (workspace query)",
            info,
        });
    }
    lwork = query[0].re as i32;
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    unsafe {
        zgeev_(
            &jobvl,
            &jobvr,
            &ni,
            work_a.data_mut().as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            vr.data_mut().as_mut_ptr(),
            &ni,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgeev",
            info,
        });
    }
    Ok((w, vr))
}

// The SVD route below exists only as a test oracle: production code
// measures operator norms by power iteration, and the tests cross-check
// that against zgesdd on small matrices.

#[cfg(test)]
extern "C" {
    fn zgesdd_(
        jobz: *const c_char,
        m: *const i32,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        s: *mut f64,
        u: *mut C64,
        ldu: *const i32,
        vt: *mut C64,
        ldvt: *const i32,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        iwork: *mut i32,
        info: *mut i32,
    );
}

#[cfg(test)]
fn zgesdd(a: &CMatrix, jobz: u8) -> Result<(Vec<f64>, Option<(CMatrix, CMatrix)>)> {
    single_threaded();
    let (m, n) = (a.rows(), a.cols());
    let (mi, ni) = (as_i32(m), as_i32(n));
    let mn = m.min(n);
    let mut work_a = a.clone();
    let mut s = vec![0.0_f64; mn];
    let want_vecs = jobz == b'S';
    let (mut u, mut vt) = if want_vecs {
        (CMatrix::zeros(m, mn), CMatrix::zeros(mn, n))
    } else {
        (CMatrix::zeros(1, 1), CMatrix::zeros(1, 1))
    };
    let ldu = as_i32(u.rows());
    let ldvt = as_i32(vt.rows());
    let mx = m.max(n);
    let rwork_len = if want_vecs {
        mn * (5 * mn + 7).max(2 * mx + 2 * mn + 1)
    } else {
        7 * mn
    };
    let mut rwork = vec![0.0_f64; rwork_len.max(1)];
    let mut iwork = vec![0_i32; 8 * mn.max(1)];
    let mut info: i32 = 0;
    let jobz_c = jobz as c_char;

    let mut lwork: i32 = -1;
    let mut query = [C64::new(0.0, 0.0)];
    unsafe {
        zgesdd_(
            &jobz_c,
            &mi,
            &ni,
            work_a.data_mut().as_mut_ptr(),
            &mi,
            s.as_mut_ptr(),
            u.data_mut().as_mut_ptr(),
            &ldu,
            vt.data_mut().as_mut_ptr(),
            &ldvt,
            query.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgesdd (workspace query)",
            info,
        });
    }
    lwork = query[0].re as i32;
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    unsafe {
        zgesdd_(
            &jobz_c,
            &mi,
            &ni,
            work_a.data_mut().as_mut_ptr(),
            &mi,
            s.as_mut_ptr(),
            u.data_mut().as_mut_ptr(),
            &ldu,
            vt.data_mut().as_mut_ptr(),
            &ldvt,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgesdd",
            info,
        });
    }
    Ok((s, want_vecs.then_some((u, vt))))
}

/// Singular values of a general complex matrix, descending.
#[cfg(test)]
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(zgesdd(a, b'N')?.0)
}

/// Thin SVD: A = U diag(s) Vh with U (m x min), Vh (min x n).
#[cfg(test)]
pub fn svd_thin(a: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (s, uv) = zgesdd(a, b'S')?;
    let (u, vt) = uv.expect("jobz=S returns factors");
    Ok((u, s, vt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vnorm;

    #[test]
    fn dft4_eigenvalues_are_fourth_roots() {
        let n = 4;
        let scale = 1.0 / (n as f64).sqrt();
        let dft = CMatrix::from_fn(n, n, |i, j| {
            let ang = -2.0 * std::f64::consts::PI * (i * j) as f64 / n as f64;
            C64::new(ang.cos(), ang.sin()) * scale
        });
        let (w, vr) = eig(&dft).unwrap();
        for (k, lam) in w.iter().enumerate() {
            assert!((lam.norm() - 1.0).abs() < 1e-12);
            // residual || A v - lam v ||
            let v = vr.col(k);
            let av = dft.matvec(v);
            let r: Vec<C64> = av.iter().zip(v).map(|(a, b)| a - lam * b).collect();
            assert!(vnorm(&r) < 1e-12);
        }
    }

    #[test]
    fn svd_of_diagonal_is_sorted_abs() {
        let d = CMatrix::from_diag(&[
            C64::new(0.0, 3.0),
            C64::new(-1.0, 0.0),
            C64::new(0.5, 0.5),
        ]);
        let s = singular_values(&d).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12);
        assert!((s[1] - 1.0).abs() < 1e-12);
        assert!((s[2] - (0.5f64.powi(2) * 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn thin_svd_reconstructs() {
        let a = CMatrix::from_fn(5, 3, |i, j| {
            C64::new((i + j) as f64 * 0.3, (i as f64 - j as f64) * 0.2)
        });
        let (u, s, vt) = svd_thin(&a).unwrap();
        let mut us = u.clone();
        for j in 0..s.len() {
            let col = us.col_mut(j);
            for v in col.iter_mut() {
                *v *= s[j];
            }
        }
        let rec = us.matmul(&vt);
        let mut diff = rec;
        diff.sub_assign(&a);
        assert!(diff.max_abs() < 1e-12);
    }
}
