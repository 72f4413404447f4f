#ifndef FPOL_SPECFUN_HPP
#define FPOL_SPECFUN_HPP

namespace fpol::specfun {

// Bessel function of the first kind J_order(x) for integer order.
// Valid for |order| <= 64 and |x| <= 50; throws std::domain_error outside.
// Ascending power series for |x| <= 12, downward Miller recurrence
// normalized by J_0 + 2*sum_k J_{2k} = 1 for larger arguments.
double bessel_j(int order, double x);

// Associated Laguerre polynomial L_n^k(x) by the three-term recurrence.
// Requires n, k >= 0 and n <= 64.
double assoc_laguerre(int n, int k, double x);

// Terminating Gauss hypergeometric sum
//   2F1(-m, -n; -m-n; z) = sum_{i=0}^{min(m,n)} [(-m)_i (-n)_i / ((-m-n)_i i!)] z^i.
// The i <= min(m,n) terms never reach the zero of the denominator Pochhammer.
// For m = n = 0 the sum is empty beyond i = 0 and the value is 1 by convention.
double hyp2f1_terminating(int m, int n, double z);

// ln(n!) for 0 <= n <= 10^6.
double ln_factorial(int n);

} // namespace fpol::specfun

#endif
