fn main() {
    // Dense eigen/SVD routines come from the system LAPACK. OpenBLAS ships
    // both the BLAS and LAPACK symbols in one shared object.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
