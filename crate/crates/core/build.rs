fn main() {
    // LAPACK/BLAS symbols for ndarray-linalg and the banded solver come from the
    // system OpenBLAS build.
    println!("cargo:rustc-link-lib=openblas");
}
