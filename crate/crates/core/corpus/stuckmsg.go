package main

// The message stays in the buffer forever, which is not an error.
func main() {
	ch := make(chan int, 1)
	go func() {
		ch <- 42
	}()
}
