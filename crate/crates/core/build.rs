// LAPACK/BLAS come from the system OpenBLAS (it bundles the LAPACK routines).
fn main() {
    println!("cargo:rustc-link-lib=openblas");
}
