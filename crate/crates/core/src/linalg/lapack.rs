//! Thin safe wrappers over the handful of LAPACK drivers used for the
//! large dense problems. All matrices are column-major, matching nalgebra.

use std::os::raw::{c_char, c_int};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

// Pulls in the system OpenBLAS that provides the LAPACK symbols.
extern crate openblas_src;

fn dim_i32(n: usize) -> Result<c_int> {
    c_int::try_from(n).map_err(|_| Error::InvalidInput(format!("dimension {n} too large for LAPACK")))
}

fn check(routine: &'static str, info: c_int) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Lapack { routine, info })
    }
}

/// Full symmetric eigendecomposition (ascending eigenvalues) via `dsyevd`.
pub(crate) fn dsyevd(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let ni = dim_i32(n)?;
    let mut z = a.clone();
    let mut w = vec![0.0; n];
    let jobz = b'V' as c_char;
    let uplo = b'U' as c_char;
    let mut info: c_int = 0;

    let mut work_query = [0.0f64];
    let mut iwork_query = [0 as c_int];
    let query: c_int = -1;
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            z.as_mut_slice().as_mut_ptr(),
            &ni.max(1),
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &query,
            iwork_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    check("dsyevd", info)?;
    let lwork = work_query[0] as c_int;
    let liwork = iwork_query[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            z.as_mut_slice().as_mut_ptr(),
            &ni.max(1),
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork.max(1),
            iwork.as_mut_ptr(),
            &liwork.max(1),
            &mut info,
        );
    }
    check("dsyevd", info)?;
    Ok((DVector::from_vec(w), z))
}

/// The `k` lowest eigenpairs of a symmetric matrix via `dsyevr`, ascending.
pub(crate) fn dsyevr_lowest(a: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let ni = dim_i32(n)?;
    let ki = dim_i32(k)?;
    let mut work_a = a.clone();
    let mut w = vec![0.0; n];
    let mut z = DMatrix::<f64>::zeros(n, k);
    let mut isuppz = vec![0 as c_int; 2 * k];
    let jobz = b'V' as c_char;
    let range = b'I' as c_char;
    let uplo = b'U' as c_char;
    let (vl, vu) = (0.0f64, 0.0f64);
    let il: c_int = 1;
    let abstol = 0.0f64;
    let mut m: c_int = 0;
    let mut info: c_int = 0;

    let mut work_query = [0.0f64];
    let mut iwork_query = [0 as c_int];
    let query: c_int = -1;
    unsafe {
        lapack_sys::dsyevr_(
            &jobz,
            &range,
            &uplo,
            &ni,
            work_a.as_mut_slice().as_mut_ptr(),
            &ni,
            &vl,
            &vu,
            &il,
            &ki,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_slice().as_mut_ptr(),
            &ni,
            isuppz.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &query,
            iwork_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    check("dsyevr", info)?;
    let lwork = (work_query[0] as c_int).max(1);
    let liwork = iwork_query[0].max(1);
    let mut work = vec![0.0f64; lwork as usize];
    let mut iwork = vec![0 as c_int; liwork as usize];
    unsafe {
        lapack_sys::dsyevr_(
            &jobz,
            &range,
            &uplo,
            &ni,
            work_a.as_mut_slice().as_mut_ptr(),
            &ni,
            &vl,
            &vu,
            &il,
            &ki,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_slice().as_mut_ptr(),
            &ni,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    check("dsyevr", info)?;
    if m as usize != k {
        return Err(Error::Lapack { routine: "dsyevr", info: -m });
    }
    w.truncate(k);
    Ok((w, z))
}

/// Eigenvalues of a general real matrix via `dgeev` (no eigenvectors).
pub(crate) fn dgeev_values(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    let ni = dim_i32(n)?;
    let mut work_a = a.clone();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut dummy = [0.0f64];
    let one: c_int = 1;
    let jobv = b'N' as c_char;
    let mut info: c_int = 0;
    let mut work_query = [0.0f64];
    let query: c_int = -1;
    unsafe {
        lapack_sys::dgeev_(
            &jobv,
            &jobv,
            &ni,
            work_a.as_mut_slice().as_mut_ptr(),
            &ni,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            dummy.as_mut_ptr(),
            &one,
            dummy.as_mut_ptr(),
            &one,
            work_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    check("dgeev", info)?;
    let lwork = (work_query[0] as c_int).max(3 * ni).max(1);
    let mut work = vec![0.0f64; lwork as usize];
    unsafe {
        lapack_sys::dgeev_(
            &jobv,
            &jobv,
            &ni,
            work_a.as_mut_slice().as_mut_ptr(),
            &ni,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            dummy.as_mut_ptr(),
            &one,
            dummy.as_mut_ptr(),
            &one,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    check("dgeev", info)?;
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex::new(re, im)).collect())
}

/// Eigenpairs of a symmetric tridiagonal matrix via `dstev` (ascending).
pub(crate) fn dstev(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = diag.len();
    debug_assert_eq!(offdiag.len() + 1, n.max(1));
    let ni = dim_i32(n)?;
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = DMatrix::<f64>::zeros(n, n);
    let mut work = vec![0.0f64; (2 * n).saturating_sub(2).max(1)];
    let jobz = b'V' as c_char;
    let mut info: c_int = 0;
    unsafe {
        lapack_sys::dstev_(
            &jobz,
            &ni,
            d.as_mut_ptr(),
            e.as_mut_ptr(),
            z.as_mut_slice().as_mut_ptr(),
            &ni.max(1),
            work.as_mut_ptr(),
            &mut info,
        );
    }
    check("dstev", info)?;
    Ok((d, z))
}
