package main

import "fmt"

func producer(ch chan int) {
	for {
		ch <- produce()
	}
}

func consumer(ch chan int) {
	for {
		fmt.Println(<-ch)
	}
}

func main() {
	k := readInt()
	n := readInt()
	m := readInt()
	ch := make(chan int, k)
	for i := 0; i < n; i++ {
		go producer(ch)
	}
	for j := 0; j < m; j++ {
		go consumer(ch)
	}
}
