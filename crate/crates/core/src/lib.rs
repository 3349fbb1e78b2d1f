/*!
Reconstruction of compactly supported acoustic sources in the plane from
multi-frequency far-field measurements over a limited aperture.

The crate chains two stages. A direct sampling indicator turns the
measured far-field patterns at a few low wavenumbers into an estimate of a
disc containing the source support. On that disc the source is expanded in
Dirichlet eigenfunctions of the Laplacian (Fourier-Bessel modes), and the
expansion coefficients are inferred with a preconditioned Crank-Nicolson
Metropolis-Hastings sampler under a Gaussian prior. The conditional mean of
the posterior gives the reconstruction.

Modules follow the stages: [`special`] (Bessel functions, zeros, disc
eigenfunctions), [`source`] (source terms, triangulations, quadrature),
[`forward`] (far-field synthesis and noise), [`dsm`] (sampling indicator and
support estimate), [`expansion`] (Fourier-Bessel basis and the forward
operator), [`mcmc`] (pCN sampler), and [`pipeline`] (end-to-end driver and
artifact output).
*/

pub mod dsm;
pub mod error;
pub mod expansion;
pub mod forward;
pub mod geometry;
pub mod mcmc;
pub mod pipeline;
pub mod source;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{Disc, Ellipse, Point, Region};
