//! `zgeev` from the system LAPACK (linked through OpenBLAS).

use polepath_core::eigen::EigenSolver;
use polepath_core::{CMatrix, Error, C64};

#[link(name = "openblas")]
extern "C" {
    fn zgeev_(
        jobvl: *const u8,
        jobvr: *const u8,
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

/// Eigenvalues only, no eigenvectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lapack;

impl EigenSolver for Lapack {
    fn eigenvalues(&self, a: &CMatrix) -> polepath_core::Result<Vec<C64>> {
        let n = a.dim();
        if n == 0 {
            return Ok(Vec::new());
        }
        let ni = i32::try_from(n).map_err(|_| Error::InvalidArgument("matrix too large for LAPACK".into()))?;
        // Column-major copy.
        let mut m = a.transpose().as_slice().to_vec();
        let mut w = vec![C64::new(0.0, 0.0); n];
        let mut vl = [C64::new(0.0, 0.0)];
        let mut vr = [C64::new(0.0, 0.0)];
        let mut rwork = vec![0.0; 2 * n];
        let mut info = 0;
        let mut query = [C64::new(0.0, 0.0)];
        // SAFETY: every buffer has the length zgeev documents for JOBVL = JOBVR = 'N'
        // and the pointers stay valid for the duration of both calls.
        unsafe {
            zgeev_(
                b"N".as_ptr(),
                b"N".as_ptr(),
                &ni,
                m.as_mut_ptr(),
                &ni,
                w.as_mut_ptr(),
                vl.as_mut_ptr(),
                &1,
                vr.as_mut_ptr(),
                &1,
                query.as_mut_ptr(),
                &-1,
                rwork.as_mut_ptr(),
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::EigenNoConvergence);
        }
        let lwork = (query[0].re as i32).max(2 * ni);
        let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
        // SAFETY: as above, with a workspace of the queried size.
        unsafe {
            zgeev_(
                b"N".as_ptr(),
                b"N".as_ptr(),
                &ni,
                m.as_mut_ptr(),
                &ni,
                w.as_mut_ptr(),
                vl.as_mut_ptr(),
                &1,
                vr.as_mut_ptr(),
                &1,
                work.as_mut_ptr(),
                &lwork,
                rwork.as_mut_ptr(),
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::EigenNoConvergence);
        }
        Ok(w)
    }
}
